import json
import math

import numpy as np
import pytest

from conftest import all_models, dataset, fd_gradient, fd_hessian, grid_argmax, random_instance
from paircompare.data import sample_outcomes
from paircompare.errors import DimensionMismatch
from paircompare.graph import ComparisonGraph, GraphSamplerConfig, sample_graph
from paircompare.mle import (
    FitOptions,
    FitResult,
    fit,
    gradient,
    hessian,
    log_likelihood,
    mle_exists,
    profile_fit_threshold,
    profile_loglik,
)
from paircompare.models import make_model

BT = make_model("bt")
CARD = make_model("cardinal", sigma=2)


# --- likelihood, gradient, Hessian --------------------------------------------


def test_log_likelihood_examples():
    assert log_likelihood(BT, dataset(BT, 2, [(0, 1, 1)]), [0.0, 0.0]) == pytest.approx(-math.log(2), abs=1e-15)
    val = log_likelihood(CARD, dataset(CARD, 2, [(0, 1, 1.0)]), [0.5, -0.5])
    assert val == pytest.approx(-math.log(2 * math.sqrt(2 * math.pi)), abs=1e-14)


def test_translation_invariance(model):
    data, u = random_instance(model, seed=4)
    assert abs(log_likelihood(model, data, u + 3) - log_likelihood(model, data, u)) < 1e-9


def test_gradient_example():
    g = gradient(BT, dataset(BT, 2, [(0, 1, 1)]), [0.0, 0.0])
    np.testing.assert_allclose(g, [0.5, -0.5], atol=1e-15)


def test_hessian_example():
    H = hessian(BT, dataset(BT, 2, [(0, 1, 1)]), [0.0, 0.0])
    np.testing.assert_allclose(H, [[-0.25, 0.25], [0.25, -0.25]], atol=1e-15)


@pytest.mark.parametrize("seed", range(20))
def test_gradient_and_hessian_match_finite_differences(seed):
    for model in all_models():
        data, u = random_instance(model, seed=seed)
        g = gradient(model, data, u)
        assert np.max(np.abs(fd_gradient(model, data, u) - g)) <= 1e-6 * max(1.0, np.max(np.abs(g)))
        H = hessian(model, data, u)
        assert np.max(np.abs(fd_hessian(model, data, u) - H)) <= 1e-5 * max(1.0, np.max(np.abs(H)))


def test_hessian_is_laplacian(model):
    data, u = random_instance(model, n=15, seed=8)
    H = hessian(model, data, u)
    assert np.all(H.sum(axis=1) == 0) or np.max(np.abs(H.sum(axis=1))) < 1e-13
    np.testing.assert_array_equal(H, H.T)
    assert np.array_equal(hessian(model, data, u, sparse=True).toarray(), H)


def test_gradient_sums_to_zero(model):
    data, u = random_instance(model, seed=9)
    assert abs(gradient(model, data, u).sum()) < 1e-12


def test_dimension_check():
    with pytest.raises(DimensionMismatch):
        gradient(BT, dataset(BT, 2, [(0, 1, 1)]), [0.0])


# --- fitting ----------------------------------------------------------------


def test_cardinal_single_edge():
    data = dataset(CARD, 2, [(0, 1, 1.0)])
    res = fit(CARD, data)
    assert res.status == "converged"
    np.testing.assert_allclose(res.u_hat, [0.5, -0.5], atol=1e-12)
    oracle = grid_argmax(lambda u: log_likelihood(CARD, data, u), 1)
    assert np.max(np.abs(res.u_hat - oracle)) <= 2e-3


def test_cardinal_path():
    data = dataset(CARD, 3, [(0, 1, 1.0), (1, 2, 1.0)])
    res = fit(CARD, data)
    np.testing.assert_allclose(res.u_hat, [1, 0, -1], atol=1e-12)
    oracle = grid_argmax(lambda u: log_likelihood(CARD, data, u), 2)
    assert np.max(np.abs(res.u_hat - oracle)) <= 2e-3


def test_bt_three_cycle():
    data = dataset(BT, 3, [(0, 1, 1), (1, 2, 1), (2, 0, 1)])
    res = fit(BT, data)
    assert res.converged
    np.testing.assert_allclose(res.u_hat, 0, atol=1e-12)
    oracle = grid_argmax(lambda u: log_likelihood(BT, data, u), 2)
    assert np.max(np.abs(res.u_hat - oracle)) <= 2e-3


def test_bt_single_edge_nonexistent():
    res = fit(BT, dataset(BT, 2, [(0, 1, 1)]))
    assert res.status == "nonexistent"


def test_disconnected_nonexistent():
    res = fit(CARD, dataset(CARD, 4, [(0, 1, 1.0), (2, 3, 0.5)]))
    assert res.status == "nonexistent"
    assert "disconnected" in res.message


def test_undefeated_player_nonexistent():
    # subject 0 beats everyone; the others form a cycle
    triples = [(0, 1, 1), (0, 2, 1), (0, 3, 1), (1, 2, 1), (2, 3, 1), (3, 1, 1)]
    assert not mle_exists(BT, dataset(BT, 4, triples))
    assert fit(BT, dataset(BT, 4, triples)).status == "nonexistent"


def test_existence_with_ties():
    # Rao-Kupper ties penalise both directions
    rk = make_model("rao-kupper", theta=2)
    assert mle_exists(rk, dataset(rk, 2, [(0, 1, 0)]))
    assert not mle_exists(rk, dataset(rk, 2, [(0, 1, 1)]))


def test_fit_satisfies_first_order_conditions(model):
    rng = np.random.default_rng(21)
    n = 60
    g = sample_graph(GraphSamplerConfig(n, 0.5, 0.5, "constant-p"), rng)
    data = sample_outcomes(model, rng.uniform(-0.5, 0.5, n), g, rng=rng)
    res = fit(model, data)
    assert res.converged
    assert abs(res.u_hat.sum()) < 1e-10
    assert np.max(np.abs(gradient(model, data, res.u_hat))) <= 1e-10
    # concavity: nearby feasible points are worse
    for _ in range(5):
        d = rng.normal(size=n) * 1e-3
        assert log_likelihood(model, data, res.u_hat + d - d.mean()) <= res.loglik


def test_warm_start_converges_immediately():
    data, _ = random_instance(BT, n=30, seed=2, p=0.8)
    res = fit(BT, data)
    again = fit(BT, data, FitOptions(init=res.u_hat))
    assert again.iterations == 0
    np.testing.assert_allclose(again.u_hat, res.u_hat, atol=1e-15)


def test_relabeling_permutes_estimate():
    model = make_model("davidson")
    data, _ = random_instance(model, n=25, seed=6, p=0.7)
    perm = np.random.default_rng(0).permutation(25)
    relabeled = dataset(model, 25, list(zip(perm[data.i], perm[data.j], data.x)))
    a, b = fit(model, data), fit(model, relabeled)
    np.testing.assert_allclose(b.u_hat[perm], a.u_hat, atol=1e-9)


def test_large_sparse_fit_uses_sparse_solver():
    rng = np.random.default_rng(1)
    n = 3000
    p = n**-0.5
    g = sample_graph(GraphSamplerConfig(n, p, p * math.log(n), "uniform"), rng)
    data = sample_outcomes(CARD, rng.uniform(-1, 1, n), g, rng=rng)
    res = fit(CARD, data)
    assert res.converged and res.iterations <= 3


def test_fit_result_json_round_trip():
    res = fit(CARD, dataset(CARD, 2, [(0, 1, 1.0)]))
    d = json.loads(res.to_json())
    assert set(d) >= {"u_hat", "loglik", "iterations", "status"}
    back = FitResult.from_dict(d)
    np.testing.assert_array_equal(back.u_hat, res.u_hat)
    assert back.status == res.status


def test_fit_options_validated():
    with pytest.raises(ValueError):
        FitOptions(grad_tol=0)
    with pytest.raises(ValueError):
        FitOptions(divergence_bound=-1)


# --- threshold profiling ------------------------------------------------------


def test_profile_single_value():
    rk = make_model("rao-kupper", theta=2)
    data, _ = random_instance(rk, n=10, seed=3, p=0.9)
    theta, res = profile_fit_threshold("rao-kupper", data, [3.0])
    assert theta == 3.0 and res.converged


def _dense_data(model, n, seed):
    rng = np.random.default_rng(seed)
    g = sample_graph(GraphSamplerConfig(n, 0.5, 0.5, "constant-p"), rng)
    return sample_outcomes(model, rng.uniform(-1, 1, n), g, rng=rng)


@pytest.mark.slow
def test_profile_recovers_clm4_threshold():
    grid = np.round(np.arange(1.8, 2.91, 0.1), 10)
    truth = make_model("clm4", theta=2.32)
    hits = 0
    for seed in range(50):
        theta, _ = profile_fit_threshold("clm4", _dense_data(truth, 300, seed), grid)
        hits += abs(theta - 2.32) <= 0.1
    assert hits >= 45


@pytest.mark.slow
def test_profile_prefers_true_rao_kupper_threshold():
    truth = make_model("rao-kupper", theta=2)
    wins = 0
    for seed in range(50):
        (_, at2), (_, at4) = profile_loglik("rao-kupper", _dense_data(truth, 100, seed), [2.0, 4.0])
        wins += at2.loglik >= at4.loglik
    assert wins >= 45

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from conftest import dataset, random_instance
from paircompare.errors import InvalidAlpha, IsolatedVertex, ZeroDegree
from paircompare.graph import ComparisonGraph
from paircompare.inference import (
    VarianceEstimate,
    asymptotic_variance,
    benjamini_hochberg,
    bonferroni,
    confidence_interval,
    individual_error_bound,
    inference_report,
    normal_quantile,
    plugin_variance,
    two_sided_p,
    z_test_difference,
)
from paircompare.mle import fit
from paircompare.models import make_model

BT = make_model("bt")
CARD = make_model("cardinal", sigma=2)

# reference tennis estimates: three players against a fourth
ATP_U = np.array([3.235, 3.214, 3.129, 2.872])
ATP_SD = np.array([0.229, 0.203, 0.179, 0.196])


def test_cardinal_variance_is_inverse_degree():
    g = ComparisonGraph.from_edges(5, [(0, 1), (0, 2), (0, 3), (3, 4)])
    rho = asymptotic_variance(CARD, g, np.random.default_rng(0).normal(size=5)).rho
    np.testing.assert_allclose(rho, 4 / g.degrees(), rtol=1e-15)


def test_bt_complete_graph_variance():
    rho = asymptotic_variance(BT, ComparisonGraph.complete(3), np.zeros(3)).rho
    np.testing.assert_allclose(rho, 2.0, rtol=1e-15)


def test_isolated_vertex_flagged():
    v = asymptotic_variance(BT, ComparisonGraph.from_edges(3, [(0, 1)]), np.zeros(3))
    assert v.isolated.tolist() == [False, False, True]
    report = inference_report(np.zeros(3), v)
    assert report[2]["rho"] is None and report[0]["rho"] == pytest.approx(4.0)


def test_plugin_examples():
    star = dataset(BT, 5, [(0, k, 1) for k in range(1, 5)])
    assert plugin_variance(BT, star, np.zeros(5)).rho[0] == pytest.approx(1.0, abs=1e-15)
    rk = make_model("rao-kupper", theta=2)
    rho = plugin_variance(rk, dataset(rk, 2, [(0, 1, 0)]), np.zeros(2)).rho
    np.testing.assert_allclose(rho, 27 / 8, rtol=1e-14)


def test_plugin_equals_asymptotic_at_truth():
    data, u = random_instance(BT, n=12, seed=1)
    a = asymptotic_variance(BT, data.graph, u).rho
    b = plugin_variance(BT, data, u).rho
    assert np.array_equal(a, b)


def test_plugin_continuity():
    data, _ = random_instance(BT, n=20, seed=3, p=0.9)
    u_hat = fit(BT, data).u_hat
    base = plugin_variance(BT, data, u_hat).rho
    bumped = plugin_variance(BT, data, u_hat + 1e-6 * np.random.default_rng(0).normal(size=20)).rho
    assert np.max(np.abs(bumped / base - 1)) <= 1e-4


def test_cardinal_plugin_independent_of_estimate():
    data, _ = random_instance(CARD, n=15, seed=5)
    rng = np.random.default_rng(1)
    a = plugin_variance(CARD, data, rng.normal(size=15)).rho
    b = plugin_variance(CARD, data, rng.normal(size=15) * 10).rho
    assert np.array_equal(a, b)


def test_multiplicity_weights_information():
    g = ComparisonGraph.from_edges(2, [(0, 1)], [4])
    np.testing.assert_allclose(asymptotic_variance(BT, g, np.zeros(2)).rho, 1.0)


# --- intervals and tests -------------------------------------------------------


def test_confidence_interval_examples():
    lo, hi = confidence_interval(0.0, 0.04, 0.05)
    assert lo == pytest.approx(-0.391993, abs=1e-6) and hi == pytest.approx(0.391993, abs=1e-6)
    lo1, hi1 = confidence_interval(1.0, 0.04, 0.05)
    assert (lo1 + hi1) / 2 == pytest.approx(1.0) and hi1 - lo1 == pytest.approx(hi - lo)
    lo, hi = confidence_interval(0.0, 0.25, 0.32)
    assert hi == pytest.approx(0.5 * 0.994458, abs=1e-6)


def test_normal_quantile_against_scipy():
    for a in [0.001, 0.01, 0.05, 0.1, 0.32, 0.5, 0.9]:
        assert normal_quantile(a) == pytest.approx(stats.norm.isf(a / 2), rel=1e-12)
    with pytest.raises(InvalidAlpha):
        normal_quantile(1.0)


def test_interval_needs_positive_variance():
    with pytest.raises(IsolatedVertex):
        confidence_interval(0.0, math.inf)
    with pytest.raises(IsolatedVertex):
        confidence_interval(0.0, 0.0)


def test_interval_vectorized():
    lo, hi = confidence_interval(np.array([0.0, 1.0]), np.array([0.04, 0.01]))
    assert lo.shape == (2,)
    np.testing.assert_allclose(hi - lo, 2 * 1.959963984540054 * np.array([0.2, 0.1]))


def test_reference_p_values():
    rho = ATP_SD**2
    p = [z_test_difference(k, 3, ATP_U, rho).p_value for k in range(3)]
    np.testing.assert_allclose(p, [0.229, 0.226, 0.334], atol=2e-3)
    assert benjamini_hochberg(p, 0.05) == []


def test_equal_scores_give_unit_p():
    r = z_test_difference(0, 1, [0.3, 0.3], [0.1, 0.2])
    assert r.statistic == 0.0 and r.p_value == 1.0


@settings(max_examples=50, deadline=None)
@given(
    u=st.lists(st.floats(-5, 5), min_size=2, max_size=2),
    rho=st.lists(st.floats(1e-3, 10), min_size=2, max_size=2),
)
def test_z_test_antisymmetric(u, rho):
    a = z_test_difference(0, 1, u, rho)
    b = z_test_difference(1, 0, u, rho)
    assert a.statistic == -b.statistic
    assert a.p_value == b.p_value


def test_two_sided_p():
    assert two_sided_p(1.959963984540054) == pytest.approx(0.05, rel=1e-12)
    assert two_sided_p(-40) == pytest.approx(0.0, abs=1e-300)


def test_z_test_rejects_isolated():
    with pytest.raises(IsolatedVertex):
        z_test_difference(0, 1, [0, 0], VarianceEstimate(np.array([1.0, np.inf]), "x"))


def test_benjamini_hochberg_examples():
    assert benjamini_hochberg([0.01, 0.02, 0.04], 0.05) == [0, 1, 2]
    assert benjamini_hochberg([0.9], 0.05) == []
    assert benjamini_hochberg([], 0.05) == []
    # step-up: a later pass rescues an earlier miss
    assert benjamini_hochberg([0.04, 0.001, 0.03, 0.5], 0.05) == [1]
    assert benjamini_hochberg([0.02, 0.001, 0.03, 0.04], 0.05) == [0, 1, 2, 3]


@settings(max_examples=100, deadline=None)
@given(p=st.lists(st.floats(0, 1), min_size=1, max_size=30), alpha=st.floats(0.001, 0.5))
def test_bh_contains_bonferroni(p, alpha):
    bh = set(benjamini_hochberg(p, alpha))
    assert set(bonferroni(p, alpha)) <= bh
    assert bh <= {k for k, v in enumerate(p) if v <= alpha}


def test_individual_error_bound():
    assert individual_error_bound(1.0, 1.0, math.e, 1) == pytest.approx(1.0)
    assert individual_error_bound(1.0, 1.0, math.e, 4) == pytest.approx(0.5)
    vals = [individual_error_bound(2.0, 0.5, 100, d) for d in range(1, 20)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    with pytest.raises(ZeroDegree):
        individual_error_bound(1, 1, 10, 0)


def test_inference_report_labels():
    v = VarianceEstimate(np.array([0.04, 0.09]), "x")
    rows = inference_report([1.0, -1.0], v, 0.05, ["a", "b"])
    assert rows[0]["label"] == "a"
    assert rows[1]["ci_hi"] == pytest.approx(-1 + 1.959963984540054 * 0.3)

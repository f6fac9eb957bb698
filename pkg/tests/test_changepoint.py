import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from heartsway.errors import SeriesTooShort
from heartsway.signal import (
    KernelChangepointDetector,
    PeltParams,
    RbfSegmentCost,
    median_heuristic_gamma,
    pelt_changepoints,
)

from oracles import optimal_partition_changepoints, rbf_cost_direct


def test_constant_series_no_changepoints():
    assert pelt_changepoints([4.0] * 100) == []


def test_two_level_step():
    series = [0.0] * 50 + [5.0] * 50
    assert pelt_changepoints(series, PeltParams(penalty=10.0)) == [50]


def test_default_penalty_is_ten():
    assert PeltParams().penalty == 10.0


def test_too_short_rejected():
    with pytest.raises(SeriesTooShort):
        pelt_changepoints([1.0])
    with pytest.raises(SeriesTooShort):
        pelt_changepoints([])


@pytest.mark.parametrize("seed", range(12))
@pytest.mark.parametrize("penalty", [1.0, 10.0, 100.0])
def test_matches_optimal_partitioning(seed, penalty):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 61))
    x = rng.integers(0, 10, n).astype(float)
    cost = RbfSegmentCost(x)
    got = pelt_changepoints(x, PeltParams(penalty=penalty))
    assert got == optimal_partition_changepoints(n, cost.cost, penalty)


def test_cost_provider_matches_direct_summation():
    rng = np.random.default_rng(11)
    x = rng.normal(0, 2, 64)
    cost = RbfSegmentCost(x)
    for a in range(0, 60, 6):
        for b in range(a + 1, 65, 9):
            direct = rbf_cost_direct(x, cost.gamma, a, b)
            assert cost.cost(a, b) == pytest.approx(direct, abs=1e-9)


def test_penalty_monotonicity():
    rng = np.random.default_rng(5)
    x = np.concatenate([rng.normal(m, 0.5, 40) for m in (0, 4, -3, 2)])
    counts = [
        len(pelt_changepoints(x, PeltParams(penalty=p)))
        for p in (0.5, 1, 2, 5, 10, 30, 100, 1000)
    ]
    assert counts == sorted(counts, reverse=True)


def test_shift_invariance_with_fixed_bandwidth():
    # Integer values + integer shift keep pairwise differences bit-exact.
    rng = np.random.default_rng(8)
    x = rng.integers(0, 10, 50).astype(float)
    params = PeltParams(penalty=10.0, kernel_bandwidth=0.25)
    assert pelt_changepoints(x, params) == pelt_changepoints(x + 1000.0, params)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.integers(min_value=0, max_value=9).map(float), min_size=2, max_size=40),
    st.sampled_from([1.0, 10.0, 100.0]),
)
def test_property_matches_oracle(values, penalty):
    x = np.asarray(values)
    cost = RbfSegmentCost(x)
    got = pelt_changepoints(x, PeltParams(penalty=penalty))
    assert got == optimal_partition_changepoints(len(values), cost.cost, penalty)


def test_changepoints_are_interior_and_sorted():
    rng = np.random.default_rng(2)
    x = np.concatenate([rng.normal(m, 0.3, 30) for m in (0, 5, 0)])
    cps = pelt_changepoints(x, PeltParams(penalty=5.0))
    assert cps == sorted(cps)
    assert all(0 < c < len(x) for c in cps)


def test_median_heuristic_fallback_on_constant():
    assert median_heuristic_gamma(np.full(50, 3.0)) == 1.0


def test_median_heuristic_subsample_cap():
    rng = np.random.default_rng(1)
    x = rng.normal(0, 1, 5000)
    g1 = median_heuristic_gamma(x)
    g2 = median_heuristic_gamma(x)
    assert g1 == g2 > 0


def test_bandwidth_override():
    x = np.array([0.0] * 20 + [6.0] * 20)
    tight = RbfSegmentCost(x, gamma=10.0)
    assert tight.gamma == 10.0
    auto = RbfSegmentCost(x)
    assert auto.gamma != 10.0


def test_param_validation():
    with pytest.raises(ValueError):
        PeltParams(penalty=-1)
    with pytest.raises(ValueError):
        PeltParams(kernel_bandwidth=0.0)


def test_detector_estimator_api():
    series = [0.0] * 30 + [8.0] * 30
    det = KernelChangepointDetector(penalty=10.0)
    assert det.fit_predict(series) == [30]
    assert det.changepoints_ == [30]
    assert det.predict() == [30]
    assert det.get_params() == {"penalty": 10.0, "kernel_bandwidth": None}
    cloned = clone(det)
    assert cloned.get_params() == det.get_params()
    with pytest.raises(AttributeError):
        KernelChangepointDetector().predict()

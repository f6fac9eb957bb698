import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heartsway.signal import FilterParams, RollingOutlierFilter, rolling_outlier_filter

from oracles import outlier_removals_direct


def run_filter(values, **kw):
    return rolling_outlier_filter(values, FilterParams(**kw))


def test_constant_series_all_kept():
    kept, removed = run_filter([5.0] * 150)
    assert list(removed) == []
    assert kept.tolist() == [5.0] * 150


def test_short_series_all_kept():
    kept, removed = run_filter([1.0, 100.0, -50.0])
    assert list(removed) == []
    assert kept.tolist() == [1.0, 100.0, -50.0]


def test_injected_spike_removed():
    # Expected removal set computed by per-index direct recomputation.
    rng = np.random.default_rng(42)
    x = rng.normal(0.0, 1.0, 150)
    x[120] = x[:120].mean() + 10.0  # ~10 sigma out
    kept, removed = run_filter(x)
    oracle = outlier_removals_direct(list(x), 100, 3.0, 5)
    assert 120 in oracle
    assert list(removed) == oracle


@pytest.mark.parametrize("seed", range(8))
def test_matches_direct_recomputation(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(0.0, 1.0, int(rng.integers(150, 301)))
    x[rng.integers(0, x.size, 5)] += 9.0
    kept, removed = run_filter(x)
    assert list(removed) == outlier_removals_direct(list(x), 100, 3.0, 5)


def test_warmup_points_never_removed():
    x = [0.0, 0.0, 1000.0, 0.0, -1000.0] + [0.0] * 50
    _, removed = run_filter(x, window=10, min_window=5)
    assert all(i >= 5 for i in removed)


def test_zero_variance_window_keeps_candidate():
    # A clean step after a constant run: the window has no scale, so the
    # onset survives; later shifted points are rejected until the window
    # picks up the new level.
    x = [100.0] * 60 + [400.0] * 60
    _, removed = run_filter(x)
    assert 60 not in removed
    assert list(removed) == [61, 62, 63, 64, 65, 66]


def test_idempotent_on_constant_output():
    x = [7.5] * 200
    kept, _ = run_filter(x)
    kept2, removed2 = run_filter(kept)
    assert list(removed2) == []
    assert kept2.tolist() == kept.tolist()


def test_kept_and_removed_partition_input():
    rng = np.random.default_rng(3)
    x = rng.normal(0, 1, 220)
    x[50] += 20
    kept, removed = run_filter(x)
    assert len(kept) + len(removed) == len(x)
    kept_idx = np.setdiff1d(np.arange(len(x)), removed)
    assert kept.tolist() == x[kept_idx].tolist()


@settings(max_examples=60, deadline=None)
@given(
    st.lists(
        st.integers(min_value=-1000, max_value=1000).map(float),
        min_size=1,
        max_size=160,
    )
)
def test_partition_property(values):
    kept, removed = run_filter(values)
    assert len(kept) + len(removed) == len(values)
    removed_list = list(removed)
    assert removed_list == sorted(removed_list)
    assert all(0 <= i < len(values) for i in removed_list)
    # order preserved
    kept_idx = [i for i in range(len(values)) if i not in set(removed_list)]
    assert kept.tolist() == [values[i] for i in kept_idx]


@settings(max_examples=40, deadline=None)
@given(
    st.lists(
        st.integers(min_value=-50, max_value=50).map(float), min_size=10, max_size=120
    )
)
def test_integer_series_match_oracle(values):
    _, removed = run_filter(values, window=20, min_window=5)
    assert list(removed) == outlier_removals_direct(values, 20, 3.0, 5)


def test_param_validation():
    with pytest.raises(ValueError):
        FilterParams(window=3, min_window=5)
    with pytest.raises(ValueError):
        FilterParams(k_sigma=0)
    with pytest.raises(ValueError):
        FilterParams(min_window=1)


def test_estimator_wrapper():
    est = RollingOutlierFilter(window=50, k_sigma=3.0)
    assert est.get_params()["window"] == 50
    x = [1.0, 2.0] * 40 + [500.0] + [1.0, 2.0] * 10
    out = est.fit_transform(np.array(x))
    assert 80 in est.removed_indices_
    assert len(out) + len(est.removed_indices_) == len(x)
    est.set_params(window=100)
    assert est.get_params()["window"] == 100

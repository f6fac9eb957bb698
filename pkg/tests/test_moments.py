import numpy as np
import pytest

from heartsway.errors import NonMonotonicTime, SeriesTooShort
from heartsway.signal import (
    FilterParams,
    PeltParams,
    RbfSegmentCost,
    StretchSample,
    movement_moments,
    rolling_outlier_filter,
)

from conftest import level_shift_values
from oracles import optimal_partition_changepoints


def at_one_hz(values, start_ms=0):
    return [StretchSample(t=start_ms + 1000 * i, value=v) for i, v in enumerate(values)]


def test_constant_series_no_moments():
    assert movement_moments(at_one_hz([210.0] * 120)) == []


def test_two_level_step_at_60s():
    # Expected value re-derived through the unpruned DP on the filtered
    # values: the onset sample survives (zero-variance window) and starts
    # the new segment, so the moment lands exactly on the step.
    samples = at_one_hz([100.0] * 60 + [400.0] * 60)
    values = [s.value for s in samples]
    kept, removed = rolling_outlier_filter(values, FilterParams())
    kept_idx = np.setdiff1d(np.arange(len(values)), removed)
    cost = RbfSegmentCost(kept)
    oracle_cps = optimal_partition_changepoints(len(kept), cost.cost, 10.0)
    oracle_moments = [samples[kept_idx[c]].t for c in oracle_cps]
    assert oracle_moments == [60000]

    assert [m.t for m in movement_moments(samples)] == [60000]


def test_empty_input_rejected():
    with pytest.raises(SeriesTooShort):
        movement_moments([])


def test_single_sample_rejected():
    with pytest.raises(SeriesTooShort):
        movement_moments([StretchSample(0, 5.0)])


def test_non_monotonic_rejected():
    with pytest.raises(NonMonotonicTime):
        movement_moments([StretchSample(0, 1.0), StretchSample(0, 2.0)])


def test_timestamps_subset_of_input():
    rng = np.random.default_rng(9)
    values = np.array(level_shift_values(300, [80, 190])) + rng.normal(0, 1.5, 300)
    samples = at_one_hz(values.tolist(), start_ms=12345)
    input_ts = {s.t for s in samples}
    for m in movement_moments(samples):
        assert m.t in input_ts


def test_moments_strictly_increasing():
    samples = at_one_hz(level_shift_values(600, [60, 200, 420]))
    ts = [m.t for m in movement_moments(samples)]
    assert ts == sorted(set(ts)) == [60000, 200000, 420000]


def test_pipeline_offsets_are_filter_then_detect():
    # A hard spike gets rejected by the filter and never becomes a moment.
    values = [100.0] * 200
    values[90] = 5000.0
    samples = at_one_hz(values)
    assert movement_moments(samples) == []


def test_custom_params_flow_through():
    samples = at_one_hz(level_shift_values(150, [70]))
    strict = movement_moments(samples, FilterParams(), PeltParams(penalty=1e9))
    assert strict == []

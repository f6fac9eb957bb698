"""Body-movement extraction: stretch series -> toss-and-turn timestamps.

Pipeline order is fixed: reject rolling-window outliers first, then run the
kernel changepoint search on the surviving values, then map each changepoint
back to the timestamp of the surviving sample that starts the new segment.
Only timing is kept; movement intensity is deliberately not recorded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NonMonotonicTime, SeriesTooShort
from .changepoint import PeltParams, pelt_changepoints
from .outliers import FilterParams, rolling_outlier_filter

# Stretch resistance is sampled nominally once a second.
STRETCH_PERIOD_MS = 1000


@dataclass(frozen=True)
class StretchSample:
    """One stretch-sensor reading: epoch-ms timestamp and raw ADC value."""

    t: int
    value: float


@dataclass(frozen=True)
class MovementMoment:
    """Timestamp of one detected toss-and-turn event."""

    t: int


def movement_moments(
    stretch: list[StretchSample],
    fp: FilterParams = FilterParams(),
    pp: PeltParams = PeltParams(),
) -> list[MovementMoment]:
    """Detect movement timestamps in an ordered stretch series.

    Raises SeriesTooShort when fewer than two samples survive filtering,
    NonMonotonicTime when input timestamps are not strictly increasing.
    """
    n = len(stretch)
    for i in range(1, n):
        if stretch[i].t <= stretch[i - 1].t:
            raise NonMonotonicTime(f"t={stretch[i].t} after t={stretch[i - 1].t}")
    if n < 2:
        raise SeriesTooShort(f"need >= 2 stretch samples, got {n}")

    values = [s.value for s in stretch]
    kept_values, removed_idx = rolling_outlier_filter(values, fp)
    if kept_values.size < 2:
        raise SeriesTooShort(
            f"only {kept_values.size} samples survived outlier filtering"
        )
    kept_idx = np.setdiff1d(np.arange(n), removed_idx)

    changepoints = pelt_changepoints(kept_values, pp)
    return [MovementMoment(t=stretch[kept_idx[cp]].t) for cp in changepoints]

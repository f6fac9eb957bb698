"""Signal processing: BPM -> IBI, outlier rejection, changepoint detection."""

from .changepoint import (
    KernelChangepointDetector,
    PeltParams,
    RbfSegmentCost,
    median_heuristic_gamma,
    pelt_changepoints,
)
from .ibi import (
    PLAUSIBLE_BPM_HIGH,
    PLAUSIBLE_BPM_LOW,
    BpmSample,
    IbiEvent,
    bpm_to_ibi,
    is_plausible_bpm,
)
from .moments import STRETCH_PERIOD_MS, MovementMoment, StretchSample, movement_moments
from .outliers import FilterParams, RollingOutlierFilter, rolling_outlier_filter
from .validation import as_series

__all__ = [
    "BpmSample",
    "IbiEvent",
    "StretchSample",
    "MovementMoment",
    "FilterParams",
    "PeltParams",
    "KernelChangepointDetector",
    "RollingOutlierFilter",
    "RbfSegmentCost",
    "bpm_to_ibi",
    "is_plausible_bpm",
    "movement_moments",
    "median_heuristic_gamma",
    "pelt_changepoints",
    "rolling_outlier_filter",
    "as_series",
    "PLAUSIBLE_BPM_LOW",
    "PLAUSIBLE_BPM_HIGH",
    "STRETCH_PERIOD_MS",
]

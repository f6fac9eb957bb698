"""Rolling-window outlier rejection for the stretch series.

A point is dropped when it lies more than k_sigma standard deviations from
the mean of the trailing window of raw values.  The window ends at the point
before the candidate: including the candidate would let a large spike inflate
the very statistics meant to catch it.  Window statistics are computed over
the raw input series, so an already-removed spike still appears in later
windows; removal decisions are independent per index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .validation import as_series


@dataclass(frozen=True)
class FilterParams:
    """Tunables for the rolling outlier filter.

    window: trailing window length (points).
    k_sigma: rejection threshold in standard deviations.
    min_window: below this many trailing points a candidate is always kept.
    """

    window: int = 100
    k_sigma: float = 3.0
    min_window: int = 5

    def __post_init__(self):
        if self.min_window < 2:
            raise ValueError("min_window must be >= 2")
        if self.window < self.min_window:
            raise ValueError("window must be >= min_window")
        if self.k_sigma <= 0:
            raise ValueError("k_sigma must be > 0")


def rolling_outlier_filter(
    series, params: FilterParams = FilterParams()
) -> tuple[np.ndarray, np.ndarray]:
    """Return (kept values, removed indices).

    Point i is removed iff |x[i] - mean| > k_sigma * std of the trailing
    window x[max(0, i-window):i] (population std).  The first min_window
    points are always kept: there is no basis to reject them.  A window
    with zero variance also keeps its candidate: it provides no scale to
    standardize against.
    """
    x = as_series(series)
    n = x.size
    removed = np.zeros(n, dtype=bool)
    w, k, mw = params.window, params.k_sigma, params.min_window

    # Ramp-up region: growing windows from min_window up to full width.
    for i in range(mw, min(w, n)):
        win = x[:i]
        sigma = win.std()
        removed[i] = sigma > 0 and abs(x[i] - win.mean()) > k * sigma

    # Steady region: all windows have exactly `w` points.
    if n > w:
        wins = np.lib.stride_tricks.sliding_window_view(x, w)[: n - w]
        mu = wins.mean(axis=1)
        sigma = wins.std(axis=1)
        removed[w:] = (sigma > 0) & (np.abs(x[w:] - mu) > k * sigma)

    removed_idx = np.flatnonzero(removed)
    return x[~removed], removed_idx


class RollingOutlierFilter(TransformerMixin, BaseEstimator):
    """Estimator wrapper around the rolling outlier filter.

    Stateless: fit is a no-op.  transform returns the surviving values and
    records `kept_indices_` / `removed_indices_` for the last series seen.
    """

    def __init__(self, window: int = 100, k_sigma: float = 3.0, min_window: int = 5):
        self.window = window
        self.k_sigma = k_sigma
        self.min_window = min_window

    def _params(self) -> FilterParams:
        return FilterParams(self.window, self.k_sigma, self.min_window)

    def fit(self, X, y=None):
        self._params()  # validate
        return self

    def transform(self, X):
        kept, removed_idx = rolling_outlier_filter(X, self._params())
        n = as_series(X).size
        self.removed_indices_ = removed_idx
        self.kept_indices_ = np.setdiff1d(np.arange(n), removed_idx)
        return kept

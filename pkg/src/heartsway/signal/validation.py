"""Input validation helpers shared by the signal estimators."""

from __future__ import annotations

import numpy as np


def as_series(x, *, name: str = "series") -> np.ndarray:
    """Coerce to a 1-D float64 array of finite values.

    Accepts lists, tuples, and (n,)- or (n,1)-shaped arrays, mirroring how
    scikit-learn transformers accept column vectors.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr.ravel()
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr

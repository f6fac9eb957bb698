"""Independent reference implementations used to check the production paths.

These deliberately avoid the production search/vectorization strategies:
the partitioning oracle runs the unpruned quadratic dynamic program over
every candidate split, and the filter oracle recomputes each window's
statistics by direct per-index summation.
"""

from __future__ import annotations

import math


def optimal_partition_changepoints(n: int, cost_fn, penalty: float) -> list[int]:
    """Unpruned optimal partitioning over all last-segment starts.

    Uses the same objective and tie rules as the production search:
    minimize total cost, then changepoint count, then the index list
    lexicographically.  cost_fn(a, b) is the segment cost of [a, b).
    """
    f_cost = [0.0] + [math.inf] * n
    f_ncp = [0] * (n + 1)
    f_cps: list[tuple[int, ...]] = [()] * (n + 1)

    for t in range(1, n + 1):
        best_tau = None
        best_cost = math.inf
        best_ncp = 0
        for tau in range(t):
            c = f_cost[tau] + cost_fn(tau, t)
            if tau > 0:
                c += penalty
            ncp = f_ncp[tau] + (1 if tau > 0 else 0)
            if c < best_cost:
                take = True
            elif c == best_cost:
                if ncp != best_ncp:
                    take = ncp < best_ncp
                else:
                    cand = f_cps[tau] + (tau,) if tau > 0 else ()
                    best = f_cps[best_tau] + (best_tau,) if best_tau > 0 else ()
                    take = cand < best
            else:
                take = False
            if take:
                best_tau, best_cost, best_ncp = tau, c, ncp
        f_cost[t] = best_cost
        f_ncp[t] = best_ncp
        f_cps[t] = f_cps[best_tau] + (best_tau,) if best_tau > 0 else ()

    return list(f_cps[n])


def rbf_cost_direct(values, gamma: float, a: int, b: int) -> float:
    """Segment cost of [a, b) by direct double summation of kernel values."""
    total = 0.0
    for i in range(a, b):
        for j in range(a, b):
            total += math.exp(-gamma * (values[i] - values[j]) ** 2)
    length = b - a
    return length - total / length


def outlier_removals_direct(values, window: int, k_sigma: float, min_window: int) -> list[int]:
    """Removal indices by per-index recomputation of trailing mean/std."""
    removed = []
    for i in range(len(values)):
        lo = max(0, i - window)
        win = values[lo:i]
        if len(win) < min_window:
            continue
        mean = sum(win) / len(win)
        var = sum((v - mean) ** 2 for v in win) / len(win)
        if var > 0 and abs(values[i] - mean) > k_sigma * math.sqrt(var):
            removed.append(i)
    return removed

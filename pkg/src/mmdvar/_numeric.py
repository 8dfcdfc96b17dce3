"""Low-level compiled helpers: compensated reductions and order statistics of
pairwise gaps in a sorted vector."""

import numba
import numpy as np


@numba.njit(cache=True, nogil=True)
def neumaier_sum(a):
    """Compensated (Neumaier) sum of a 1-D float array."""
    s = 0.0
    c = 0.0
    for v in a:
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    return s + c


@numba.njit(cache=True, nogil=True)
def neumaier_sum_sq(a):
    s = 0.0
    c = 0.0
    for x in a:
        v = x * x
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    return s + c


@numba.njit(cache=True, nogil=True)
def _count_gaps_le(z, t):
    # number of pairs i < j with z[j] - z[i] <= t; z sorted ascending
    n = z.shape[0]
    j = 0
    c = 0
    for i in range(n):
        if j < i + 1:
            j = i + 1
        while j < n and z[j] - z[i] <= t:
            j += 1
        c += j - i - 1
    return c


@numba.njit(cache=True, nogil=True)
def _collect_gaps(z, lo, hi, out):
    # gaps z[j] - z[i] (i < j) lying in (lo, hi]; returns count written
    n = z.shape[0]
    k = 0
    a = 0
    b = 0
    for i in range(n):
        if a < i + 1:
            a = i + 1
        while a < n and z[a] - z[i] <= lo:
            a += 1
        if b < a:
            b = a
        while b < n and z[b] - z[i] <= hi:
            b += 1
        for j in range(a, b):
            out[k] = z[j] - z[i]
            k += 1
    return k


def _select_gap(z: np.ndarray, rank: int) -> float:
    n = z.shape[0]
    budget = max(4 * n, 1024)
    lo, c_lo = -1.0, 0
    hi, c_hi = float(z[-1] - z[0]), n * (n - 1) // 2
    # invariant: count(gaps <= lo) <= rank < count(gaps <= hi)
    while c_hi - c_lo > budget:
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi):
            # lo and hi are adjacent doubles: every gap in the band equals hi
            return hi
        c = _count_gaps_le(z, mid)
        if c > rank:
            hi, c_hi = mid, c
        else:
            lo, c_lo = mid, c
    band = np.empty(c_hi - c_lo, dtype=np.float64)
    k = _collect_gaps(z, lo, hi, band)
    band = np.sort(band[:k])
    return float(band[rank - c_lo])


def sorted_gap_order_stats(z: np.ndarray, ranks) -> list[float]:
    """Exact order statistics of all pairwise gaps ``z[j] - z[i]``, ``i < j``.

    ``z`` must be sorted ascending. ``ranks`` are 0-based positions in the
    ascending list of the ``n(n-1)/2`` gaps. Bisection on the gap value plus a
    selection inside a narrow band keeps memory at ``O(n)``; the full gap list
    is never materialised.
    """
    return [_select_gap(z, int(r)) for r in ranks]

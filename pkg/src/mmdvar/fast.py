"""Exact ``O(n log n + m log m)`` MMD^2 and variance for the univariate Laplacian kernel.

On a sorted sequence the Laplacian kernel factorises across gaps,
``exp(-(s_k - s_i)/sigma) = prod_{i<t<=k} exp(-(s_t - s_{t-1})/sigma)``, so
every kernel row sum is available from one forward and one backward linear
recursion. Squared kernel entries are Laplacian kernels at ``sigma / 2``,
which gives the Frobenius norms from a second set of passes.

The compiled passes write into caller-provided arrays and keep only scalars
otherwise, so working memory is a handful of length-``n`` and length-``m``
vectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TextIO

import numba
import numpy as np

from ._numeric import neumaier_sum
from .errors import InputError, UnsortedInputError, UnsupportedFamilyError
from .exact import (
    EstimationPath,
    KernelSums,
    MmdReport,
    check_pair,
    report_from_sums,
)
from .kernels import KernelFamily, KernelSpec, Sample, as_sample, power_bandwidth


@dataclass(frozen=True, eq=False)
class AccumulatorSet:
    """Prefix (``r``) and suffix (``l``) row sums of one sorted sample.

    ``r[i] + l[i]`` is the off-diagonal kernel row sum at sorted position
    ``i``; ``r[0] == 0`` and ``l[-1] == 0``.
    """

    r: np.ndarray
    l: np.ndarray
    sigma_used: float
    values: np.ndarray

    @property
    def length(self) -> int:
        return self.r.shape[0]

    @property
    def row_sums(self) -> np.ndarray:
        return self.r + self.l


@dataclass(frozen=True, eq=False)
class CrossAccumulatorSet:
    """Cross-sample accumulators over the merged sorted sequence.

    ``a_xy``/``z_xy`` are indexed by the sorted X sample, ``a_yx``/``z_yx``
    by the sorted Y sample. ``labels`` and ``deltas`` describe the merged
    sequence (``deltas[0] == 0``); ``merged`` holds its values.
    """

    a_xy: np.ndarray
    z_xy: np.ndarray
    a_yx: np.ndarray
    z_yx: np.ndarray
    labels: np.ndarray
    deltas: np.ndarray
    merged: np.ndarray
    sigma_used: float

    @property
    def xy_row_sums(self) -> np.ndarray:
        return self.a_xy + self.z_xy

    @property
    def yx_row_sums(self) -> np.ndarray:
        return self.a_yx + self.z_yx


# -- compiled passes ---------------------------------------------------------


@numba.njit(cache=True, nogil=True)
def _trissl(s, sigma):
    inv = 1.0 / sigma
    r = 0.0
    t = 0.0
    comp = 0.0
    for i in range(1, s.shape[0]):
        r = (r + 1.0) * np.exp(-(s[i] - s[i - 1]) * inv)
        u = t + r
        comp += (t - u) + r if t >= r else (r - u) + t
        t = u
    return t + comp


@numba.njit(cache=True, nogil=True)
def _prefix_suffix(s, sigma, r_out, l_out):
    # r_out[i] = R_i; l_out[i] += L_i (pass the same array twice to get R + L)
    inv = 1.0 / sigma
    n = s.shape[0]
    if n == 0:
        return
    r = 0.0
    r_out[0] = 0.0
    for i in range(1, n):
        r = (r + 1.0) * np.exp(-(s[i] - s[i - 1]) * inv)
        r_out[i] = r
    lv = 0.0
    for i in range(n - 2, -1, -1):
        lv = (lv + 1.0) * np.exp(-(s[i + 1] - s[i]) * inv)
        l_out[i] += lv


@numba.njit(cache=True, nogil=True)
def _row_sum_total(s, sigma):
    # sum_i (R_i + L_i) without storing either sequence
    inv = 1.0 / sigma
    n = s.shape[0]
    tot = 0.0
    comp = 0.0
    r = 0.0
    for i in range(1, n):
        r = (r + 1.0) * np.exp(-(s[i] - s[i - 1]) * inv)
        u = tot + r
        comp += (tot - u) + r if tot >= r else (r - u) + tot
        tot = u
    lv = 0.0
    for i in range(n - 2, -1, -1):
        lv = (lv + 1.0) * np.exp(-(s[i + 1] - s[i]) * inv)
        u = tot + lv
        comp += (tot - u) + lv if tot >= lv else (lv - u) + tot
        tot = u
    return tot + comp


@numba.njit(cache=True, nogil=True)
def _cross_passes(xs, ys, sigma, ax_out, zx_out, ay_out, zy_out):
    # Merge order: on ties X precedes Y. Forward: ax_out[i] = A_{x->y}, ay_out[j] = A_{y->x}.
    # Backward: zx_out[i] += Z_{x->y}, zy_out[j] += Z_{y->x}.
    # Both recursions start from an empty accumulator, so the first merged
    # element contributes its own indicator.
    inv = 1.0 / sigma
    n = xs.shape[0]
    m = ys.shape[0]
    i = 0
    j = 0
    a_xy = 0.0
    a_yx = 0.0
    prev = 0.0
    first = True
    while i < n or j < m:
        take_x = j >= m or (i < n and xs[i] <= ys[j])
        cur = xs[i] if take_x else ys[j]
        if not first:
            d = np.exp(-(cur - prev) * inv)
            a_xy *= d
            a_yx *= d
        first = False
        prev = cur
        if take_x:
            a_yx += 1.0
            ax_out[i] = a_xy
            i += 1
        else:
            a_xy += 1.0
            ay_out[j] = a_yx
            j += 1
    i = n - 1
    j = m - 1
    z_xy = 0.0
    z_yx = 0.0
    first = True
    while i >= 0 or j >= 0:
        # reverse merge order: Y precedes X on ties
        take_y = i < 0 or (j >= 0 and ys[j] >= xs[i])
        cur = ys[j] if take_y else xs[i]
        if not first:
            d = np.exp(-(prev - cur) * inv)
            z_xy *= d
            z_yx *= d
        first = False
        prev = cur
        if take_y:
            z_xy += 1.0
            zy_out[j] += z_yx
            j -= 1
        else:
            z_yx += 1.0
            zx_out[i] += z_xy
            i -= 1


@numba.njit(cache=True, nogil=True)
def _cross_total(xs, ys, sigma):
    # sum over X positions of A_{x->y} + Z_{x->y}, i.e. the grand sum of K_XY
    inv = 1.0 / sigma
    n = xs.shape[0]
    m = ys.shape[0]
    tot = 0.0
    comp = 0.0
    i = 0
    j = 0
    acc = 0.0
    prev = 0.0
    first = True
    while i < n or j < m:
        take_x = j >= m or (i < n and xs[i] <= ys[j])
        cur = xs[i] if take_x else ys[j]
        if not first:
            acc *= np.exp(-(cur - prev) * inv)
        first = False
        prev = cur
        if take_x:
            u = tot + acc
            comp += (tot - u) + acc if abs(tot) >= acc else (acc - u) + tot
            tot = u
            i += 1
        else:
            acc += 1.0
            j += 1
    i = n - 1
    j = m - 1
    acc = 0.0
    first = True
    while i >= 0 or j >= 0:
        take_y = i < 0 or (j >= 0 and ys[j] >= xs[i])
        cur = ys[j] if take_y else xs[i]
        if not first:
            acc *= np.exp(-(prev - cur) * inv)
        first = False
        prev = cur
        if take_y:
            acc += 1.0
            j -= 1
        else:
            u = tot + acc
            comp += (tot - u) + acc if abs(tot) >= acc else (acc - u) + tot
            tot = u
            i -= 1
    return tot + comp


# -- input handling ----------------------------------------------------------


def _sigma_of(sigma) -> float:
    if isinstance(sigma, KernelSpec):
        if sigma.family is not KernelFamily.LAPLACIAN:
            raise UnsupportedFamilyError("the sorted fast path only supports the Laplacian kernel")
        return sigma.sigma
    return KernelSpec.laplacian(sigma).sigma


def _require_sorted(s) -> np.ndarray:
    s = as_sample(s)
    if s.d != 1:
        raise InputError(f"the sorted recursions need univariate data, got d={s.d}")
    v = s.values
    if not s.sorted and v.shape[0] > 1 and np.any(v[1:] < v[:-1]):
        raise UnsortedInputError("input must be sorted in non-decreasing order")
    return v


def _sorted_values(s: Sample) -> np.ndarray:
    if s.d != 1:
        raise InputError(f"the fast path needs univariate data, got d={s.d}")
    if s.sorted:
        return s.values
    return np.sort(s.values)


# -- public operations -------------------------------------------------------


def trissl(s, sigma) -> float:
    """Lower-triangular sum ``sum_{i > i'} k(s_i, s_i')`` of a sorted sample.

    Linear time via ``R_i = (R_{i-1} + 1) exp(-(s_i - s_{i-1}) / sigma)``.
    Raises :class:`UnsortedInputError` for unsorted input.
    """
    return float(_trissl(_require_sorted(s), _sigma_of(sigma)))


def prefix_suffix(s, sigma) -> AccumulatorSet:
    v = _require_sorted(s)
    sig = _sigma_of(sigma)
    r = np.empty(v.shape[0])
    l = np.zeros(v.shape[0])
    _prefix_suffix(v, sig, r, l)
    return AccumulatorSet(r, l, sig, v)


def cross_prefix_suffix(x, y, sigma) -> CrossAccumulatorSet:
    """Cross-kernel accumulators for two sorted samples.

    For the ``i``-th sorted X value, ``a_xy[i] + z_xy[i] = sum_j k(x_i, y_j)``;
    symmetrically for Y. Merged-sequence labels and gaps are included for
    inspection and dumping.
    """
    xs = _require_sorted(x)
    ys = _require_sorted(y)
    sig = _sigma_of(sigma)
    n, m = xs.shape[0], ys.shape[0]
    ax, zx = np.empty(n), np.zeros(n)
    ay, zy = np.empty(m), np.zeros(m)
    _cross_passes(xs, ys, sig, ax, zx, ay, zy)
    values = np.concatenate([xs, ys])
    is_y = np.concatenate([np.zeros(n, dtype=np.int8), np.ones(m, dtype=np.int8)])
    order = np.lexsort((is_y, values))
    merged = values[order]
    labels = np.where(is_y[order] == 1, "Y", "X")
    deltas = np.concatenate([[0.0], np.diff(merged)]) if merged.size else merged
    return CrossAccumulatorSet(ax, zx, ay, zy, labels, deltas, merged, sig)


def fast_kernel_sums(xs: np.ndarray, ys: np.ndarray, sigma: float,
                     *, need_frob: bool = True, frob_power: int = 2) -> KernelSums:
    """Row sums at ``sigma`` and Frobenius norms at ``sigma / 2`` for sorted inputs.

    ``frob_power`` exists only so the self-test can inject a fault; any value
    other than 2 yields wrong Frobenius norms.
    """
    n, m = xs.shape[0], ys.shape[0]
    sx = np.empty(n)
    _prefix_suffix(xs, sigma, sx, sx)
    sy = np.empty(m)
    _prefix_suffix(ys, sigma, sy, sy)
    sxy = np.empty(n)
    syx = np.empty(m)
    _cross_passes(xs, ys, sigma, sxy, sxy, syx, syx)
    if not need_frob:
        return KernelSums(sx, sy, sxy, syx)
    sq = power_bandwidth(KernelSpec.laplacian(sigma), frob_power).sigma
    return KernelSums(
        sx, sy, sxy, syx,
        xx_frob_sq=float(_row_sum_total(xs, sq)),
        yy_frob_sq=float(_row_sum_total(ys, sq)),
        xy_frob_sq=float(_cross_total(xs, ys, sq)),
    )


def mmd2_fast(x, y, sigma, *, method: str = "rowsum") -> float:
    """Unbiased MMD^2 for the univariate Laplacian kernel in ``O(N log N)``.

    ``method="rowsum"`` averages per-row sums from the prefix/suffix
    accumulators. ``method="triangular"`` instead uses three triangular
    sums: the cross total is ``T(X u Y) - T(X) - T(Y)``. Unsorted input is
    sorted internally.
    """
    x, y = check_pair(x, y, 2)
    sig = _sigma_of(sigma)
    xs, ys = _sorted_values(x), _sorted_values(y)
    n, m = xs.shape[0], ys.shape[0]
    if method == "rowsum":
        sums = fast_kernel_sums(xs, ys, sig, need_frob=False)
        a = neumaier_sum(sums.xx_rows) / (n * (n - 1))
        b = neumaier_sum(sums.yy_rows) / (m * (m - 1))
        c = neumaier_sum(sums.xy_rows) / (n * m)
        return (a + b) - 2.0 * c
    if method == "triangular":
        t1 = _trissl(xs, sig)
        t2 = _trissl(ys, sig)
        t4 = _trissl(np.sort(np.concatenate([xs, ys])), sig)
        t3 = (t4 - t1) - t2
        return 2.0 * (t1 / (n * (n - 1)) + t2 / (m * (m - 1)) - t3 / (n * m))
    raise ValueError(f"unknown method {method!r}")


def variance_fast(x, y, sigma, *, clamp: bool = False) -> MmdReport:
    """MMD^2 and its full unbiased variance via sorted accumulators.

    Parameters
    ----------
    x, y : Sample or array_like
        Univariate samples, sorted or not (unsorted input is sorted here).
    sigma : float or KernelSpec
        Laplacian bandwidth.
    clamp : bool
        Floor the second-order variance at zero.

    Returns
    -------
    MmdReport
        Same contract as :func:`mmdvar.exact.variance_full`, with
        ``path == EstimationPath.FAST_LAPLACE``.
    """
    x, y = check_pair(x, y, 4, what="the variance estimate")
    sig = _sigma_of(sigma)
    sums = fast_kernel_sums(_sorted_values(x), _sorted_values(y), sig)
    return report_from_sums(sums, KernelSpec.laplacian(sig), EstimationPath.FAST_LAPLACE, clamp=clamp)


def dump_accumulators(acc: AccumulatorSet | CrossAccumulatorSet, fh: TextIO) -> None:
    """Write accumulators as whitespace-separated columns ``index value label delta``.

    Indices are 1-based. For a cross set, rows follow the merged sequence and
    ``value`` is the cross row sum at that position.
    """
    fh.write("index value label delta\n")
    if isinstance(acc, AccumulatorSet):
        rows = acc.row_sums
        deltas = np.concatenate([[0.0], np.diff(acc.values)])
        for k in range(acc.length):
            fh.write(f"{k + 1} {float(rows[k])!r} X {float(deltas[k])!r}\n")
        return
    xr, yr = acc.xy_row_sums, acc.yx_row_sums
    ix = iy = 0
    for k, lab in enumerate(acc.labels):
        if lab == "X":
            val = xr[ix]
            ix += 1
        else:
            val = yr[iy]
            iy += 1
        fh.write(f"{k + 1} {float(val)!r} {lab} {float(acc.deltas[k])!r}\n")

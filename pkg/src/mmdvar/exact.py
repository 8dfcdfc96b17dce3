"""Quadratic-time reference estimator: unbiased MMD^2 and its full variance.

Works for any kernel in :mod:`mmdvar.kernels`, any dimension and any pair of
sample sizes. Kernel blocks are swept tile by tile so that only row sums,
column sums and Frobenius norms are retained; passing ``tile=None``
materialises each block at once.

Everything downstream of the row sums (projections, matrix functionals,
second-order moments, variance assembly) is shared with the sorted fast path
in :mod:`mmdvar.fast`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._numeric import neumaier_sum, neumaier_sum_sq
from .errors import InputError, InsufficientSampleError
from .kernels import KernelSpec, Sample, as_sample, kernel_matrix

DEFAULT_TILE = 1024


class EstimationPath(str, enum.Enum):
    MATRIX = "matrix"
    FAST_LAPLACE = "fast"


@dataclass(frozen=True, eq=False)
class ProjectionVectors:
    """Empirical first-order projections ``u_hat`` (over X) and ``v_hat`` (over Y)."""

    u_hat: np.ndarray
    v_hat: np.ndarray
    u_mean: float
    v_mean: float


@dataclass(frozen=True)
class KernelMatrixStats:
    """Scalar functionals of the three kernel blocks.

    ``XX`` and ``YY`` blocks have their diagonals zeroed. ``*_frob_sq`` is the
    squared Frobenius norm, ``*_rowsum_sq`` the squared L2 norm of the row-sum
    vector, ``xy_colsum_sq`` the same for column sums of ``K_XY`` and
    ``*_grand_sum`` the sum of all entries.
    """

    xx_frob_sq: float
    xx_rowsum_sq: float
    xx_grand_sum: float
    yy_frob_sq: float
    yy_rowsum_sq: float
    yy_grand_sum: float
    xy_frob_sq: float
    xy_rowsum_sq: float
    xy_colsum_sq: float
    xy_grand_sum: float


@dataclass(frozen=True)
class SecondOrderMoments:
    """Unbiased estimates of ``E[g2^2]`` for the within-X, within-Y and cross terms."""

    g2a: float
    g2b: float
    g2c: float


@dataclass(frozen=True)
class MmdReport:
    mmd2: float
    var_t1: float
    var_t2: float
    var_total: float
    n: int
    m: int
    spec: KernelSpec
    path: EstimationPath
    stats: KernelMatrixStats | None = field(default=None, repr=False)
    moments: SecondOrderMoments | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "mmd2": self.mmd2,
            "var_t1": self.var_t1,
            "var_t2": self.var_t2,
            "var_total": self.var_total,
            "n": self.n,
            "m": self.m,
            "sigma": self.spec.sigma,
            "family": self.spec.family.value,
            "path": self.path.value,
        }


@dataclass(frozen=True, eq=False)
class KernelSums:
    """Row/column sums of the three kernel blocks plus their Frobenius norms.

    This is the common currency of both estimation paths: the matrix path
    fills it by sweeping kernel tiles, the fast path by sorted recursions.
    """

    xx_rows: np.ndarray  # off-diagonal row sums of K_XX, length n
    yy_rows: np.ndarray  # off-diagonal row sums of K_YY, length m
    xy_rows: np.ndarray  # K_XY 1_m, length n
    xy_cols: np.ndarray  # K_XY^T 1_n, length m
    xx_frob_sq: float = math.nan
    yy_frob_sq: float = math.nan
    xy_frob_sq: float = math.nan
    # the same quantities for the U-centred blocks (row and column sums near
    # zero), from which the second-order moments are evaluated; None when the
    # raw sums are used directly, as on the fast path
    centred: KernelSums | None = None

    @property
    def n(self) -> int:
        return self.xx_rows.shape[0]

    @property
    def m(self) -> int:
        return self.yy_rows.shape[0]


def falling_factorial(n: int, k: int) -> int:
    """``(n)_k = n (n-1) ... (n-k+1)``."""
    out = 1
    for t in range(k):
        out *= n - t
    return out


def check_pair(x, y, min_size: int, what: str = "MMD^2") -> tuple[Sample, Sample]:
    x = as_sample(x)
    y = as_sample(y)
    if x.d != y.d:
        raise InputError(f"dimension mismatch: X has d={x.d}, Y has d={y.d}")
    if x.n < min_size or y.n < min_size:
        raise InsufficientSampleError(
            f"{what} needs n, m >= {min_size}; got n={x.n}, m={y.n}"
        )
    return x, y


# -- kernel sweeps -----------------------------------------------------------


def _two_sum_into(acc, comp, v):
    # vectorised error-free accumulation acc + comp += v
    t = acc + v
    big = np.abs(acc) >= np.abs(v)
    comp += np.where(big, (acc - t) + v, (v - t) + acc)
    acc[...] = t


def _sweep(spec: KernelSpec, a: np.ndarray, b: np.ndarray, same: bool, tile: int | None,
           need_frob: bool, row_off: np.ndarray | None = None, col_off: np.ndarray | None = None):
    # row (and column) sums and squared Frobenius norm of the block, with the
    # diagonal of a within-sample block excluded; with offsets, of the block
    # with entries k_ij - row_off_i - col_off_j instead
    n, m = a.shape[0], b.shape[0]
    step_r = n if tile is None else int(tile)
    step_c = m if tile is None else int(tile)
    acc = {key: (np.zeros(size), np.zeros(size)) for key, size in (("r", n), ("c", m))}
    frob_parts = []
    for i0 in range(0, n, step_r):
        i1 = min(i0 + step_r, n)
        for j0 in range(0, m, step_c):
            j1 = min(j0 + step_c, m)
            k = kernel_matrix(spec, a[i0:i1], b[j0:j1])
            if row_off is not None:
                k -= row_off[i0:i1, None]
                k -= col_off[None, j0:j1]
            if same and i0 == j0:
                np.fill_diagonal(k, 0.0)
            _two_sum_into(acc["r"][0][i0:i1], acc["r"][1][i0:i1], k.sum(axis=1))
            if not same:
                _two_sum_into(acc["c"][0][j0:j1], acc["c"][1][j0:j1], k.sum(axis=0))
            if need_frob:
                np.multiply(k, k, out=k)
                frob_parts.append(float(k.sum()))
            del k
    rows = acc["r"][0] + acc["r"][1]
    cols = None if same else acc["c"][0] + acc["c"][1]
    return rows, cols, (math.fsum(frob_parts) if need_frob else math.nan)


def _centring_offsets(rows: np.ndarray, cols: np.ndarray | None, size_r: int, size_c: int):
    # U-centring: subtracting these offsets zeroes every off-diagonal row sum
    # of a within-sample block, and every row and column sum of a cross block
    if cols is None:
        if size_r < 3:
            z = np.zeros(size_r)
            return z, z
        g = neumaier_sum(rows)
        off = rows / (size_r - 2) - g / (2.0 * (size_r - 1) * (size_r - 2))
        return off, off
    g = neumaier_sum(rows)
    return rows / size_c - g / (size_r * size_c), cols / size_r


def kernel_sums(x, y, spec: KernelSpec, *, tile: int | None = DEFAULT_TILE,
                need_frob: bool = True, centre: bool = True) -> KernelSums:
    """Row sums and Frobenius norms of ``K_XX``, ``K_YY`` and ``K_XY`` by tiled sweeps.

    With ``need_frob`` and ``centre`` a second sweep repeats the computation
    on the U-centred blocks and stores it in ``centred``.
    """
    x, y = as_sample(x), as_sample(y)
    n, m = x.n, y.n
    blocks = ((x.data, x.data, True, n, n), (y.data, y.data, True, m, m), (x.data, y.data, False, n, m))
    raw = [_sweep(spec, a, b, same, tile, need_frob) for a, b, same, _, _ in blocks]
    (xxr, _, xxf), (yyr, _, yyf), (xyr, xyc, xyf) = raw
    sums = KernelSums(xxr, yyr, xyr, xyc, xxf, yyf, xyf)
    if not (need_frob and centre):
        return sums
    cen = []
    for (a, b, same, sr, sc), (rows, cols, _) in zip(blocks, raw):
        ro, co = _centring_offsets(rows, cols, sr, sc)
        cen.append(_sweep(spec, a, b, same, tile, True, ro, co))
    (cxx, _, cxxf), (cyy, _, cyyf), (cxr, cxc, cxyf) = cen
    return replace(sums, centred=KernelSums(cxx, cyy, cxr, cxc, cxxf, cyyf, cxyf))


# -- assembly shared by both paths ------------------------------------------


def components_from_sums(sums: KernelSums) -> tuple[float, float, float]:
    n, m = sums.n, sums.m
    a = neumaier_sum(sums.xx_rows) / (n * (n - 1))
    b = neumaier_sum(sums.yy_rows) / (m * (m - 1))
    c = neumaier_sum(sums.xy_rows) / (n * m)
    return a, b, c


def projections_from_sums(sums: KernelSums) -> ProjectionVectors:
    n, m = sums.n, sums.m
    u = sums.xx_rows / (n - 1) - sums.xy_rows / m
    v = sums.yy_rows / (m - 1) - sums.xy_cols / n
    return ProjectionVectors(u, v, neumaier_sum(u) / n, neumaier_sum(v) / m)


def stats_from_sums(sums: KernelSums) -> KernelMatrixStats:
    """Functionals of the kernel blocks themselves (diagonals of XX, YY zeroed)."""
    xx, yy, xr, xc = sums.xx_rows, sums.yy_rows, sums.xy_rows, sums.xy_cols
    return KernelMatrixStats(
        xx_frob_sq=sums.xx_frob_sq, yy_frob_sq=sums.yy_frob_sq, xy_frob_sq=sums.xy_frob_sq,
        xx_rowsum_sq=neumaier_sum_sq(xx), xx_grand_sum=neumaier_sum(xx),
        yy_rowsum_sq=neumaier_sum_sq(yy), yy_grand_sum=neumaier_sum(yy),
        xy_rowsum_sq=neumaier_sum_sq(xr), xy_colsum_sq=neumaier_sum_sq(xc),
        xy_grand_sum=neumaier_sum(xr),
    )


def var_t1(proj: ProjectionVectors, n: int, m: int) -> float:
    """Variance of the first-order (linear) term.

    ``4(n-2) / (n (n-1)^2) * sum_i (u_i - u_bar)^2`` plus the analogous Y
    term, i.e. ``4(n-2)/(n(n-1))`` times the unbiased sample variance of the
    projections. Vanishes for ``n == 2`` or ``m == 2``.
    """
    if n < 2 or m < 2:
        raise InsufficientSampleError(f"first-order variance needs n, m >= 2; got n={n}, m={m}")
    ss_u = neumaier_sum_sq(proj.u_hat - proj.u_mean)
    ss_v = neumaier_sum_sq(proj.v_hat - proj.v_mean)
    return 4.0 * (n - 2) / (n * (n - 1) ** 2) * ss_u + 4.0 * (m - 2) / (m * (m - 1) ** 2) * ss_v


def _g2_within(frob: float, rowsum_sq: float, grand: float, n: int) -> float:
    ff2 = float(falling_factorial(n, 2))
    ff3 = float(falling_factorial(n, 3))
    ff4 = float(falling_factorial(n, 4))
    return (
        frob / ff2
        - 2.0 / ff3 * (rowsum_sq - frob)
        + (grand * grand - 4.0 * rowsum_sq + 2.0 * frob) / ff4
    )


def second_order_moments(stats: KernelMatrixStats, n: int, m: int) -> SecondOrderMoments:
    """Unbiased ``E[g2^2]`` estimates from the kernel-matrix functionals.

    Each estimate averages products of kernel entries over index tuples with
    all indices distinct, which is what the falling-factorial denominators
    count. For the cross block, ``||K_XY^T 1||^2 - ||K_XY||_F^2`` sums over
    ``m (n)_2`` terms and ``||K_XY 1||^2 - ||K_XY||_F^2`` over ``n (m)_2``.
    """
    if n < 4 or m < 4:
        raise InsufficientSampleError(
            f"second-order moments need n, m >= 4; got n={n}, m={m}"
        )
    g2a = _g2_within(stats.xx_frob_sq, stats.xx_rowsum_sq, stats.xx_grand_sum, n)
    g2b = _g2_within(stats.yy_frob_sq, stats.yy_rowsum_sq, stats.yy_grand_sum, m)

    f = stats.xy_frob_sq
    r = stats.xy_rowsum_sq
    c = stats.xy_colsum_sq
    g = stats.xy_grand_sum
    n2 = float(falling_factorial(n, 2))
    m2 = float(falling_factorial(m, 2))
    g2c = (
        f / (n * m)
        - (c - f) / (m * n2)
        - (r - f) / (n * m2)
        + (g * g - r - c + f) / (n2 * m2)
    )
    return SecondOrderMoments(g2a, g2b, g2c)


def var_t2(moments: SecondOrderMoments, n: int, m: int) -> float:
    """Variance of the second-order residual term."""
    if n < 2 or m < 2:
        raise InsufficientSampleError(f"second-order variance needs n, m >= 2; got n={n}, m={m}")
    return (
        2.0 / (n * (n - 1)) * moments.g2a
        + 2.0 / (m * (m - 1)) * moments.g2b
        + 4.0 / (n * m) * moments.g2c
    )


def report_from_sums(sums: KernelSums, spec: KernelSpec, path: EstimationPath,
                     *, clamp: bool = False) -> MmdReport:
    """Assemble MMD^2 and both variance terms from block row sums."""
    n, m = sums.n, sums.m
    a, b, c = components_from_sums(sums)
    proj = projections_from_sums(sums)
    stats = stats_from_sums(sums)
    # the moment estimators are exactly unchanged by k_ij -> k_ij - f_i - h_j,
    # so they are taken from the centred blocks when present, which avoids
    # cancellation between their terms
    moments = second_order_moments(stats_from_sums(sums.centred or sums), n, m)
    t1 = var_t1(proj, n, m)
    t2 = var_t2(moments, n, m)
    if clamp:
        t2 = max(t2, 0.0)
    return MmdReport(
        mmd2=(a + b) - 2.0 * c,
        var_t1=t1,
        var_t2=t2,
        var_total=t1 + t2,
        n=n,
        m=m,
        spec=spec,
        path=path,
        stats=stats,
        moments=moments,
    )


# -- public matrix-path operations -------------------------------------------


def mmd_components(x, y, spec: KernelSpec, *, tile: int | None = DEFAULT_TILE) -> tuple[float, float, float]:
    """The three averages ``(A, B, C)`` with ``MMD^2 = A + B - 2C``."""
    x, y = check_pair(x, y, 2)
    return components_from_sums(kernel_sums(x, y, spec, tile=tile, need_frob=False))


def mmd2_unbiased(x, y, spec: KernelSpec, *, tile: int | None = DEFAULT_TILE) -> float:
    """Unbiased MMD^2 estimate.

    Parameters
    ----------
    x, y : Sample or array_like
        Samples of shape ``(n, d)`` and ``(m, d)`` (1-D arrays are univariate).
    spec : KernelSpec
        Kernel and bandwidth.
    tile : int or None
        Edge of the square kernel tiles; ``None`` builds each block whole.

    Returns
    -------
    float
        ``A + B - 2C``; may be negative when the two distributions coincide.
    """
    a, b, c = mmd_components(x, y, spec, tile=tile)
    return (a + b) - 2.0 * c


def empirical_projections(x, y, spec: KernelSpec, *, tile: int | None = DEFAULT_TILE) -> ProjectionVectors:
    x, y = check_pair(x, y, 2)
    return projections_from_sums(kernel_sums(x, y, spec, tile=tile, need_frob=False))


def matrix_stats(x, y, spec: KernelSpec, *, tile: int | None = DEFAULT_TILE) -> KernelMatrixStats:
    x, y = check_pair(x, y, 2)
    return stats_from_sums(kernel_sums(x, y, spec, tile=tile, centre=False))


def variance_full(x, y, spec: KernelSpec, *, tile: int | None = DEFAULT_TILE,
                  clamp: bool = False) -> MmdReport:
    """MMD^2 with its unbiased finite-sample variance, by the matrix route.

    ``var_total = var_t1 + var_t2``. ``var_t2`` is an unbiased estimate of a
    non-negative quantity and can dip below zero in very small samples; set
    ``clamp=True`` to floor it at zero (this breaks unbiasedness).

    Raises
    ------
    InsufficientSampleError
        If ``n < 4`` or ``m < 4``.
    """
    x, y = check_pair(x, y, 4, what="the variance estimate")
    sums = kernel_sums(x, y, spec, tile=tile)
    return report_from_sums(sums, spec, EstimationPath.MATRIX, clamp=clamp)

"""Brute-force reference computations.

Plain Python loops over :func:`mmdvar.kernels.kernel_eval`, sharing no code
with either estimation path. Only meant for small inputs: the moment
enumeration visits every ordered tuple of distinct indices.
"""

from __future__ import annotations

import itertools
import math
from decimal import Decimal, localcontext

import numpy as np

from .kernels import KernelSpec, as_sample, kernel_eval


def kernel_table(spec: KernelSpec, a, b) -> list[list[float]]:
    a = as_sample(a).data
    b = as_sample(b).data
    return [[kernel_eval(spec, ai, bj) for bj in b] for ai in a]


def row_sums(spec: KernelSpec, values) -> list[float]:
    """Off-diagonal kernel row sums by double loop."""
    k = kernel_table(spec, values, values)
    n = len(k)
    return [math.fsum(k[i][j] for j in range(n) if j != i) for i in range(n)]


def cross_row_sums(spec: KernelSpec, x, y) -> tuple[list[float], list[float]]:
    k = kernel_table(spec, x, y)
    rows = [math.fsum(r) for r in k]
    cols = [math.fsum(k[i][j] for i in range(len(k))) for j in range(len(k[0]))]
    return rows, cols


def components(spec: KernelSpec, x, y) -> tuple[float, float, float]:
    kxx = kernel_table(spec, x, x)
    kyy = kernel_table(spec, y, y)
    kxy = kernel_table(spec, x, y)
    n, m = len(kxx), len(kyy)
    a = math.fsum(kxx[i][j] for i in range(n) for j in range(n) if i != j) / (n * (n - 1))
    b = math.fsum(kyy[i][j] for i in range(m) for j in range(m) if i != j) / (m * (m - 1))
    c = math.fsum(kxy[i][j] for i in range(n) for j in range(m)) / (n * m)
    return a, b, c


def projections(spec: KernelSpec, x, y) -> tuple[list[float], list[float]]:
    kxx = kernel_table(spec, x, x)
    kyy = kernel_table(spec, y, y)
    kxy = kernel_table(spec, x, y)
    n, m = len(kxx), len(kyy)
    u = [
        math.fsum(kxx[i][j] for j in range(n) if j != i) / (n - 1)
        - math.fsum(kxy[i][j] for j in range(m)) / m
        for i in range(n)
    ]
    v = [
        math.fsum(kyy[j][l] for l in range(m) if l != j) / (m - 1)
        - math.fsum(kxy[i][j] for i in range(n)) / n
        for j in range(m)
    ]
    return u, v


def functionals(spec: KernelSpec, x, y) -> dict[str, float]:
    """The ten matrix functionals, each by an explicit loop."""
    kxx = kernel_table(spec, x, x)
    kyy = kernel_table(spec, y, y)
    kxy = kernel_table(spec, x, y)
    n, m = len(kxx), len(kyy)
    out = {}
    for tag, k, size in (("xx", kxx, n), ("yy", kyy, m)):
        rows = [math.fsum(k[i][j] for j in range(size) if j != i) for i in range(size)]
        out[f"{tag}_frob_sq"] = math.fsum(k[i][j] ** 2 for i in range(size) for j in range(size) if i != j)
        out[f"{tag}_rowsum_sq"] = math.fsum(r * r for r in rows)
        out[f"{tag}_grand_sum"] = math.fsum(rows)
    rows = [math.fsum(k_row) for k_row in kxy]
    cols = [math.fsum(kxy[i][j] for i in range(n)) for j in range(m)]
    out["xy_frob_sq"] = math.fsum(kxy[i][j] ** 2 for i in range(n) for j in range(m))
    out["xy_rowsum_sq"] = math.fsum(r * r for r in rows)
    out["xy_colsum_sq"] = math.fsum(c * c for c in cols)
    out["xy_grand_sum"] = math.fsum(rows)
    return out


def _mean(values) -> float:
    vals = list(values)
    return math.fsum(vals) / len(vals)


def _dmean(values) -> Decimal:
    total = Decimal(0)
    count = 0
    for v in values:
        total += v
        count += 1
    return total / count


def enumerate_moments(spec: KernelSpec, x, y) -> tuple[float, float, float]:
    """U-statistic estimates of ``E[g2^2]`` by enumerating distinct index tuples.

    Within a sample, ``E[g2^2] = E[k(a,b)^2] - 2 E[k(a,b) k(a,c)] + E[k(a,b)]^2``;
    for the cross term
    ``E[k(x,y)^2] - E[k(x,y) k(x,y')] - E[k(x,y) k(x',y)] + E[k(x,y)]^2``.
    Each expectation is averaged over all tuples of pairwise-distinct
    indices, which makes every piece unbiased. The arithmetic runs in
    60-digit decimals, so the result is exact for the given kernel values up
    to the final rounding; the pieces cancel heavily when the kernel is
    nearly constant.
    """
    with localcontext() as ctx:
        ctx.prec = 60
        kxx, kyy, kxy = (
            [[Decimal(v) for v in row] for row in kernel_table(spec, a, b)]
            for a, b in ((x, x), (y, y), (x, y))
        )
        n, m = len(kxx), len(kyy)
        perm = itertools.permutations

        def within(k, size):
            e_sq = _dmean(k[a][b] ** 2 for a, b in perm(range(size), 2))
            e_path = _dmean(k[a][b] * k[a][c] for a, b, c in perm(range(size), 3))
            e_pair = _dmean(k[a][b] * k[c][d] for a, b, c, d in perm(range(size), 4))
            return e_sq - 2 * e_path + e_pair

        g2a = within(kxx, n)
        g2b = within(kyy, m)
        e_sq = _dmean(kxy[i][j] ** 2 for i in range(n) for j in range(m))
        e_share_x = _dmean(kxy[i][j] * kxy[i][l] for i in range(n) for j, l in perm(range(m), 2))
        e_share_y = _dmean(kxy[i][j] * kxy[h][j] for j in range(m) for i, h in perm(range(n), 2))
        e_pair = _dmean(
            kxy[i][j] * kxy[h][l]
            for i, h in perm(range(n), 2)
            for j, l in perm(range(m), 2)
        )
        g2c = e_sq - e_share_x - e_share_y + e_pair
        return float(g2a), float(g2b), float(g2c)


def variance(spec: KernelSpec, x, y) -> dict[str, float]:
    """Direct evaluation of MMD^2, both variance terms and their sum."""
    a, b, c = components(spec, x, y)
    u, v = projections(spec, x, y)
    n, m = len(u), len(v)
    ub, vb = _mean(u), _mean(v)
    s2u = math.fsum((t - ub) ** 2 for t in u) / (n - 1)
    s2v = math.fsum((t - vb) ** 2 for t in v) / (m - 1)
    t1 = 4 * (n - 2) / (n * (n - 1)) * s2u + 4 * (m - 2) / (m * (m - 1)) * s2v
    g2a, g2b, g2c = enumerate_moments(spec, x, y)
    t2 = 2 / (n * (n - 1)) * g2a + 2 / (m * (m - 1)) * g2b + 4 / (n * m) * g2c
    return {"mmd2": a + b - 2 * c, "var_t1": t1, "var_t2": t2, "var_total": t1 + t2}


def rel_err(a, b) -> float:
    """Largest ``|a - b| / max(|a|, |b|)`` over paired entries (0 where both vanish)."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    scale = np.maximum(np.abs(a), np.abs(b))
    diff = np.abs(a - b)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(scale > 0, diff / scale, 0.0)
    return float(r.max()) if r.size else 0.0


def norm_rel_err(a, b) -> float:
    """``max|a - b| / max(|a|, |b|)`` over the whole vector.

    The right measure for vectors whose entries are differences of nearly
    equal terms, where a single entry close to zero has no stable relative
    error of its own.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    scale = max(np.max(np.abs(a)), np.max(np.abs(b))) if a.size else 0.0
    return float(np.max(np.abs(a - b)) / scale) if scale > 0 else 0.0

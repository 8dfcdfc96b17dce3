"""Kernels, samples and bandwidth selection.

Both estimation paths share the objects defined here: :class:`Sample` wraps an
``(n, d)`` float array together with an optional sortedness certificate, and
:class:`KernelSpec` pairs a kernel family with its bandwidth.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist

from ._numeric import sorted_gap_order_stats
from .errors import (
    BandwidthUndefinedError,
    InputError,
    UnsortedInputError,
    UnsupportedFamilyError,
)


class KernelFamily(str, enum.Enum):
    LAPLACIAN = "laplacian"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus bandwidth ``sigma`` (same units as the data)."""

    family: KernelFamily
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "family", KernelFamily(self.family))
        sigma = float(self.sigma)
        if not math.isfinite(sigma) or sigma <= 0:
            raise InputError(f"bandwidth must be a positive finite number, got {self.sigma!r}")
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def laplacian(cls, sigma: float) -> KernelSpec:
        return cls(KernelFamily.LAPLACIAN, sigma)

    @classmethod
    def gaussian(cls, sigma: float) -> KernelSpec:
        return cls(KernelFamily.GAUSSIAN, sigma)


@dataclass(frozen=True, eq=False)
class Sample:
    """An ordered batch of observations from one distribution.

    ``data`` is always a C-contiguous float64 array of shape ``(n, d)``.
    ``sorted`` certifies that ``d == 1`` and the single column is
    non-decreasing; it is verified on construction, never trusted blindly.
    """

    data: np.ndarray
    sorted: bool = False

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        if data.ndim == 1:
            data = data.reshape(-1, 1)
        if data.ndim != 2:
            raise InputError(f"sample must be 1-D or 2-D, got {data.ndim} dimensions")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise InputError(f"sample must have n >= 1 and d >= 1, got shape {data.shape}")
        if not np.isfinite(data).all():
            raise InputError("sample contains NaN or infinite values")
        if self.sorted:
            if data.shape[1] != 1:
                raise InputError("a sortedness certificate requires univariate data")
            col = data[:, 0]
            if col.shape[0] > 1 and np.any(col[1:] < col[:-1]):
                raise UnsortedInputError("sample is certified sorted but is not non-decreasing")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    @property
    def values(self) -> np.ndarray:
        """The single column of a univariate sample, as a 1-D view."""
        if self.d != 1:
            raise InputError(f"expected univariate data, got d={self.d}")
        return self.data[:, 0]

    def sorted_copy(self) -> Sample:
        if self.sorted:
            return self
        if self.d != 1:
            raise InputError("only univariate samples can be sorted")
        return Sample(np.sort(self.values, kind="stable"), sorted=True)

    def __len__(self) -> int:
        return self.n


def as_sample(obj, *, sorted: bool | None = None) -> Sample:
    """Coerce an array-like (or pass through a :class:`Sample`)."""
    if isinstance(obj, Sample):
        if sorted and not obj.sorted:
            return Sample(obj.data, sorted=True)
        return obj
    return Sample(np.asarray(obj, dtype=np.float64), sorted=bool(sorted))


def _distances(family: KernelFamily, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # L1 for Laplacian, squared L2 for Gaussian; both reduce to |a-b| (or its
    # square) when d == 1
    if a.shape[1] == 1:
        diff = np.subtract.outer(a[:, 0], b[:, 0])
        if family is KernelFamily.LAPLACIAN:
            return np.abs(diff, out=diff)
        return np.multiply(diff, diff, out=diff)
    metric = "cityblock" if family is KernelFamily.LAPLACIAN else "sqeuclidean"
    return cdist(a, b, metric=metric)


def kernel_matrix(spec: KernelSpec, a, b) -> np.ndarray:
    """Kernel block ``K[i, j] = k(a_i, b_j)`` for ``(n, d)`` and ``(m, d)`` inputs."""
    a = as_sample(a).data
    b = as_sample(b).data
    if a.shape[1] != b.shape[1]:
        raise InputError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    dist = _distances(spec.family, a, b)
    if spec.family is KernelFamily.LAPLACIAN:
        dist *= -1.0 / spec.sigma
    else:
        dist *= -1.0 / (2.0 * spec.sigma * spec.sigma)
    return np.exp(dist, out=dist)


def kernel_eval(spec: KernelSpec, x, y) -> float:
    """Evaluate ``k(x, y)`` for two points of equal dimension.

    Laplacian: ``exp(-|x - y|_1 / sigma)``. Gaussian:
    ``exp(-|x - y|_2^2 / (2 sigma^2))``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise InputError(f"points must be vectors of equal length, got {x.shape} and {y.shape}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise InputError("points must be finite")
    diff = x - y
    if spec.family is KernelFamily.LAPLACIAN:
        return math.exp(-float(np.sum(np.abs(diff))) / spec.sigma)
    return math.exp(-float(diff @ diff) / (2.0 * spec.sigma * spec.sigma))


def power_bandwidth(spec: KernelSpec, p: int) -> KernelSpec:
    """Laplacian spec whose kernel equals ``k(x, y; sigma) ** p`` pointwise.

    Raising a Laplacian kernel to the integer power ``p`` is the same as
    dividing its bandwidth by ``p``. No such identity holds for the Gaussian
    family in a form the sorted recursions can use.
    """
    if spec.family is not KernelFamily.LAPLACIAN:
        raise UnsupportedFamilyError("the bandwidth-power identity only holds for the Laplacian kernel")
    if int(p) != p or p < 1:
        raise InputError(f"power must be a positive integer, got {p!r}")
    return KernelSpec(KernelFamily.LAPLACIAN, spec.sigma / int(p))


def median_heuristic(x, y, family: KernelFamily | str | None = None) -> float:
    """Median of all off-diagonal pairwise distances in the pooled sample.

    Parameters
    ----------
    x, y : Sample or array_like
        The two samples; they are pooled before taking distances.
    family : KernelFamily, optional
        Selects the distance for ``d > 1``: L1 for Laplacian, Euclidean
        otherwise. Irrelevant for univariate data.

    Returns
    -------
    float
        The median (mean of the two central order statistics when the number
        of pairs is even). A zero median, which only happens with heavy
        ties, falls back to the smallest positive distance.

    Raises
    ------
    BandwidthUndefinedError
        If every pooled point is identical.
    """
    x = as_sample(x)
    y = as_sample(y)
    if x.d != y.d:
        raise InputError(f"dimension mismatch: {x.d} vs {y.d}")
    total = x.n + y.n
    if total < 2:
        raise InputError("median heuristic needs at least two pooled points")
    n_pairs = total * (total - 1) // 2
    ranks = ((n_pairs - 1) // 2, n_pairs // 2)

    if x.d == 1:
        z = np.sort(np.concatenate([x.values, y.values]))
        if z[-1] == z[0]:
            raise BandwidthUndefinedError("all pooled points are identical")
        lo, hi = sorted_gap_order_stats(z, ranks)
        med = 0.5 * (lo + hi)
        if med > 0:
            return med
        gaps = np.diff(z)
        return float(gaps[gaps > 0].min())

    family = KernelFamily(family) if family is not None else KernelFamily.GAUSSIAN
    metric = "cityblock" if family is KernelFamily.LAPLACIAN else "euclidean"
    dist = pdist(np.vstack([x.data, y.data]), metric=metric)
    if not np.any(dist > 0):
        raise BandwidthUndefinedError("all pooled points are identical")
    part = np.partition(dist, ranks)
    med = 0.5 * (part[ranks[0]] + part[ranks[1]])
    if med > 0:
        return float(med)
    return float(dist[dist > 0].min())

"""Path selection and kernel resolution on top of the two estimators."""

from __future__ import annotations

import enum

from .errors import UnsupportedFamilyError
from .exact import MmdReport, check_pair, mmd2_unbiased, variance_full
from .fast import mmd2_fast, variance_fast
from .kernels import KernelFamily, KernelSpec, as_sample, median_heuristic

MEDIAN = "median"


class PathChoice(str, enum.Enum):
    AUTO = "auto"
    MATRIX = "matrix"
    FAST = "fast"


def resolve_kernel(x, y, kernel=MEDIAN, family=KernelFamily.LAPLACIAN) -> KernelSpec:
    """Turn ``"median"`` or a number into a :class:`KernelSpec`; pass specs through."""
    if isinstance(kernel, KernelSpec):
        return kernel
    family = KernelFamily(family)
    if isinstance(kernel, str) and kernel == MEDIAN:
        return KernelSpec(family, median_heuristic(x, y, family))
    return KernelSpec(family, float(kernel))


def fast_eligible(x, y, spec: KernelSpec) -> bool:
    return spec.family is KernelFamily.LAPLACIAN and as_sample(x).d == 1 and as_sample(y).d == 1


def select_path(x, y, spec: KernelSpec, path=PathChoice.AUTO) -> PathChoice:
    path = PathChoice(path)
    eligible = fast_eligible(x, y, spec)
    if path is PathChoice.AUTO:
        return PathChoice.FAST if eligible else PathChoice.MATRIX
    if path is PathChoice.FAST and not eligible:
        raise UnsupportedFamilyError(
            "the fast path needs univariate data and a Laplacian kernel"
        )
    return path


def estimate(x, y, kernel=MEDIAN, *, family=KernelFamily.LAPLACIAN, path=PathChoice.AUTO,
             clamp: bool = False) -> MmdReport:
    """MMD^2 and its variance, routed to the fast path whenever it applies."""
    x, y = check_pair(x, y, 4, what="the variance estimate")
    spec = resolve_kernel(x, y, kernel, family)
    if select_path(x, y, spec, path) is PathChoice.FAST:
        return variance_fast(x, y, spec, clamp=clamp)
    return variance_full(x, y, spec, clamp=clamp)


def estimate_mmd2(x, y, kernel=MEDIAN, *, family=KernelFamily.LAPLACIAN,
                  path=PathChoice.AUTO) -> tuple[float, KernelSpec, PathChoice]:
    """MMD^2 alone; needs only ``n, m >= 2``."""
    x, y = check_pair(x, y, 2)
    spec = resolve_kernel(x, y, kernel, family)
    chosen = select_path(x, y, spec, path)
    if chosen is PathChoice.FAST:
        return mmd2_fast(x, y, spec), spec, chosen
    return mmd2_unbiased(x, y, spec), spec, chosen


__all__ = [
    "MEDIAN",
    "PathChoice",
    "estimate",
    "estimate_mmd2",
    "fast_eligible",
    "resolve_kernel",
    "select_path",
]

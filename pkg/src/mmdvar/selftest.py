"""Built-in oracle suites run by ``mmdvar selftest``.

Each suite compares one layer of the estimators against the brute-force code
in :mod:`mmdvar.oracle` on seeded random instances (Laplace mixtures, some
rounded to force ties) and records the worst relative discrepancy.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import oracle
from .exact import variance_full
from .fast import cross_prefix_suffix, fast_kernel_sums, mmd2_fast, prefix_suffix, variance_fast
from .kernels import KernelSpec

SIGMAS = (0.1, 1.0, 10.0)


@dataclass(frozen=True)
class SuiteResult:
    name: str
    cases: int
    worst: float
    tolerance: float
    seconds: float

    @property
    def passed(self) -> bool:
        return self.worst <= self.tolerance


def random_sample(rng: np.random.Generator, size: int) -> np.ndarray:
    """Two-component Laplace mixture; about a third of draws get rounded to create ties."""
    loc = rng.choice([-1.0, 1.5], size=size)
    v = rng.laplace(loc, rng.uniform(0.3, 2.0))
    if rng.random() < 0.5:
        v = np.round(v, 1)
    return v


def _sizes(rng, lo, hi):
    return int(rng.integers(lo, hi + 1)), int(rng.integers(lo, hi + 1))


def _scaled_err(a, b, scale) -> float:
    return float(np.max(np.abs(np.asarray(a, float) - np.asarray(b, float)))) / scale if scale > 0 else 0.0


def suite_rowsum(rng, cases, **_):
    worst = 0.0
    for k in range(cases):
        s = np.sort(random_sample(rng, int(rng.integers(1, 40))))
        sig = SIGMAS[k % 3]
        got = prefix_suffix(s, sig).row_sums
        worst = max(worst, oracle.rel_err(got, oracle.row_sums(KernelSpec.laplacian(sig), s)))
    return worst


def suite_cross(rng, cases, **_):
    worst = 0.0
    for k in range(cases):
        n, m = _sizes(rng, 1, 30)
        xs = np.sort(random_sample(rng, n))
        ys = np.sort(random_sample(rng, m))
        sig = SIGMAS[k % 3]
        acc = cross_prefix_suffix(xs, ys, sig)
        rows, cols = oracle.cross_row_sums(KernelSpec.laplacian(sig), xs, ys)
        worst = max(worst, oracle.rel_err(acc.xy_row_sums, rows), oracle.rel_err(acc.yx_row_sums, cols))
    return worst


def suite_frobenius(rng, cases, *, fault: bool = False, **_):
    worst = 0.0
    for k in range(cases):
        n, m = _sizes(rng, 2, 30)
        xs = np.sort(random_sample(rng, n))
        ys = np.sort(random_sample(rng, m))
        sig = SIGMAS[k % 3]
        sums = fast_kernel_sums(xs, ys, sig, frob_power=1 if fault else 2)
        ref = oracle.functionals(KernelSpec.laplacian(sig), xs, ys)
        got = [sums.xx_frob_sq, sums.yy_frob_sq, sums.xy_frob_sq]
        want = [ref["xx_frob_sq"], ref["yy_frob_sq"], ref["xy_frob_sq"]]
        worst = max(worst, oracle.rel_err(got, want))
    return worst


def suite_decomposition(rng, cases, **_):
    # the cross total recovered as T(X u Y) - T(X) - T(Y) loses digits to
    # cancellation, so errors are scaled by the largest of the three averages
    worst = 0.0
    for k in range(cases):
        n, m = _sizes(rng, 2, 30)
        x, y = random_sample(rng, n), random_sample(rng, m)
        spec = KernelSpec.laplacian(SIGMAS[k % 3])
        a, b, c = oracle.components(spec, x, y)
        ref = a + b - 2 * c
        scale = max(a, b, c)
        worst = max(worst,
                    _scaled_err(mmd2_fast(x, y, spec, method="triangular"), ref, scale),
                    _scaled_err(mmd2_fast(x, y, spec, method="rowsum"), ref, scale))
    return worst


_FIELDS = ("mmd2", "var_t1", "var_t2", "var_total")


def suite_paths(rng, cases, **_):
    worst = 0.0
    for k in range(cases):
        n, m = _sizes(rng, 4, 64)
        x, y = random_sample(rng, n), random_sample(rng, m)
        spec = KernelSpec.laplacian(SIGMAS[k % 3])
        fast = variance_fast(x, y, spec)
        full = variance_full(x, y, spec)
        worst = max(worst, oracle.rel_err([getattr(fast, f) for f in _FIELDS],
                                          [getattr(full, f) for f in _FIELDS]))
    return worst


def suite_enumeration(rng, cases, *, max_size: int = 7, **_):
    # variance fields can nearly cancel, so errors are scaled by the size of
    # the squared kernel mean that every term is built from
    worst = 0.0
    for k in range(cases):
        n, m = _sizes(rng, 4, max_size)
        x, y = random_sample(rng, n), random_sample(rng, m)
        spec = KernelSpec.laplacian(SIGMAS[k % 3])
        ref = oracle.variance(spec, x, y)
        got = variance_full(x, y, spec)
        a, b, c = oracle.components(spec, x, y)
        scale = max(a, b, c) ** 2 / min(n, m)
        for f in _FIELDS:
            s = max(a, b, c) if f == "mmd2" else scale
            worst = max(worst, _scaled_err(getattr(got, f), ref[f], s))
    return worst


SUITES = {
    "rowsum-identity": (suite_rowsum, 1e-12),
    "cross-identity": (suite_cross, 1e-12),
    "frobenius-identity": (suite_frobenius, 1e-12),
    "set-decomposition": (suite_decomposition, 1e-12),
    "path-equivalence": (suite_paths, 1e-9),
    "small-enumeration": (suite_enumeration, 1e-10),
}

_FULL_CASES = {"rowsum-identity": 60, "cross-identity": 60, "frobenius-identity": 60,
               "set-decomposition": 60, "path-equivalence": 200, "small-enumeration": 30}
_QUICK_CASES = {"rowsum-identity": 12, "cross-identity": 12, "frobenius-identity": 12,
                "set-decomposition": 12, "path-equivalence": 30, "small-enumeration": 6}


def run_selftest(*, quick: bool = False, fault_frobenius: bool = False, seed: int = 0,
                 only=None) -> list[SuiteResult]:
    """Run the oracle suites.

    Parameters
    ----------
    quick : bool
        Fewer and smaller instances; finishes in a few seconds.
    fault_frobenius : bool
        Fault injection: compute the Frobenius passes at ``sigma`` instead of
        ``sigma / 2``. Only the Frobenius suite should then fail.
    seed : int
        Base seed; each suite derives its own stream from it.
    only : iterable of str, optional
        Restrict to these suite names.
    """
    counts = _QUICK_CASES if quick else _FULL_CASES
    results = []
    for idx, (name, (fn, tol)) in enumerate(SUITES.items()):
        if only is not None and name not in only:
            continue
        rng = np.random.default_rng([seed, idx])
        t0 = time.perf_counter()
        kwargs = {"fault": fault_frobenius}
        if quick:
            kwargs["max_size"] = 6
        worst = fn(rng, counts[name], **kwargs)
        results.append(SuiteResult(name, counts[name], worst, tol, time.perf_counter() - t0))
    return results


def format_table(results) -> str:
    lines = [f"{'suite':<20} {'cases':>5} {'worst':>10} {'tol':>8} {'time_s':>7}  status"]
    for r in results:
        lines.append(f"{r.name:<20} {r.cases:>5} {r.worst:>10.2e} {r.tolerance:>8.0e} "
                     f"{r.seconds:>7.2f}  {'PASS' if r.passed else 'FAIL'}")
    return "\n".join(lines) + "\n"

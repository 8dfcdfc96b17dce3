"""Scenario generation, Monte Carlo validation, shift sweeps and scaling benchmarks.

Samples come from a counter-based generator keyed by ``(seed, replicate,
stream)`` so any replicate can be regenerated in isolation and replicates can
run in any order or on any number of threads without changing results.
Aggregation always walks replicates in index order.
"""

from __future__ import annotations

import csv
import dataclasses
import gc
import io
import json
import math
import os
import time
import tracemalloc
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .api import MEDIAN, PathChoice, estimate
from .errors import ConfigError, MmdError, ReplicateError
from .exact import variance_full
from .fast import variance_fast
from .kernels import KernelSpec, Sample

STREAM_X = 0
STREAM_Y = 1
LAPLACE_PAIR = "laplace-laplace"


@dataclass(frozen=True)
class ScenarioConfig:
    """X ~ Laplace(0, 1)^n against Y ~ Laplace(delta, 1)^m with ``m = round(ratio n)``."""

    n: int
    ratio: float = 1.0
    delta: float = 0.0
    kernel: KernelSpec | str = MEDIAN
    replicates: int = 1
    seed: int = 0
    family: str = LAPLACE_PAIR

    def __post_init__(self):
        if self.family != LAPLACE_PAIR:
            raise ConfigError(f"unknown scenario family {self.family!r}")
        if int(self.n) != self.n or self.n < 4:
            raise ConfigError(f"n must be an integer >= 4, got {self.n!r}")
        if not (math.isfinite(self.ratio) and self.ratio > 0):
            raise ConfigError(f"ratio must be positive, got {self.ratio!r}")
        if self.m < 4:
            raise ConfigError(f"round(ratio * n) must be >= 4, got {self.m}")
        if not math.isfinite(self.delta):
            raise ConfigError("delta must be finite")
        if int(self.replicates) != self.replicates or self.replicates < 1:
            raise ConfigError(f"replicates must be a positive integer, got {self.replicates!r}")
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        if not isinstance(self.kernel, KernelSpec) and self.kernel != MEDIAN:
            raise ConfigError(f"kernel must be a KernelSpec or {MEDIAN!r}")

    @property
    def m(self) -> int:
        return int(math.floor(self.ratio * self.n + 0.5))


@dataclass(frozen=True)
class SweepRow:
    n: int
    m: int
    delta: float
    path: str
    replicates: int
    seed: int
    sigma_mean: float
    mean_mmd2: float = math.nan
    se_mmd2: float = math.nan
    empvar_mmd2: float = math.nan
    mean_var_t1: float = math.nan
    mean_var_t2: float = math.nan
    mean_var_total: float = math.nan
    se_var_total: float = math.nan
    mean_t2_fraction: float = math.nan
    variance_ratio: float = math.nan
    time_median_s: float = math.nan
    time_mean_s: float = math.nan
    time_min_s: float = math.nan
    peak_alloc_bytes: float = math.nan
    status: str = "ok"


COLUMNS = [f.name for f in dataclasses.fields(SweepRow)]


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class SweepResult:
    rows: list[SweepRow] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(getattr(r, c)) for c in COLUMNS])
        return buf.getvalue()

    def to_json(self) -> str:
        def clean(v):
            return None if isinstance(v, float) and not math.isfinite(v) else v

        recs = [{c: clean(getattr(r, c)) for c in COLUMNS} for r in self.rows]
        return json.dumps(recs, indent=1)


# -- sample generation -------------------------------------------------------


def uniform_stream(seed: int, replicate: int, stream: int, size: int) -> np.ndarray:
    """Uniform draws on the open interval (0, 1) from a Philox counter generator."""
    key = np.random.SeedSequence([int(seed), int(replicate), int(stream)]).generate_state(2, np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    u = gen.random(size)
    u[u == 0.0] = 2.0**-54
    return u


def laplace_inverse_cdf(u: np.ndarray, loc: float = 0.0, scale: float = 1.0) -> np.ndarray:
    c = u - 0.5
    return loc - scale * np.sign(c) * np.log1p(-2.0 * np.abs(c))


def generate_scenario(cfg: ScenarioConfig, replicate: int = 0) -> tuple[Sample, Sample]:
    """Draw one ``(X, Y)`` pair; Y is the base Laplace(0, 1) draw translated by ``delta``."""
    x = laplace_inverse_cdf(uniform_stream(cfg.seed, replicate, STREAM_X, cfg.n))
    y = laplace_inverse_cdf(uniform_stream(cfg.seed, replicate, STREAM_Y, cfg.m))
    if cfg.delta != 0.0:
        y = y + cfg.delta
    return Sample(x), Sample(y)


# -- Monte Carlo -------------------------------------------------------------


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("MMDVAR_THREADS", "1")))
    except ValueError:
        return 1


def _run_replicates(fn, count: int, workers: int | None):
    workers = default_workers() if workers is None else max(1, int(workers))

    def guarded(r):
        try:
            return fn(r)
        except MmdError as exc:
            raise ReplicateError(r, exc) from exc

    if workers == 1:
        return [guarded(r) for r in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(guarded, range(count)))


def _summarise(cfg_n, cfg_m, delta, seed, reports, path_name) -> SweepRow:
    mmd = np.array([r.mmd2 for r in reports])
    t1 = np.array([r.var_t1 for r in reports])
    t2 = np.array([r.var_t2 for r in reports])
    tot = np.array([r.var_total for r in reports])
    sig = np.array([r.spec.sigma for r in reports])
    k = len(reports)
    empvar = float(np.var(mmd, ddof=1)) if k > 1 else math.nan
    mean_tot = math.fsum(tot) / k
    return SweepRow(
        n=cfg_n,
        m=cfg_m,
        delta=float(delta),
        path=path_name,
        replicates=k,
        seed=int(seed),
        sigma_mean=math.fsum(sig) / k,
        mean_mmd2=math.fsum(mmd) / k,
        se_mmd2=math.sqrt(empvar / k) if k > 1 else math.nan,
        empvar_mmd2=empvar,
        mean_var_t1=math.fsum(t1) / k,
        mean_var_t2=math.fsum(t2) / k,
        mean_var_total=mean_tot,
        se_var_total=float(np.std(tot, ddof=1) / math.sqrt(k)) if k > 1 else math.nan,
        mean_t2_fraction=math.fsum(t2 / tot) / k,
        variance_ratio=mean_tot / empvar if k > 1 and empvar > 0 else math.nan,
    )


def monte_carlo_variance(cfg: ScenarioConfig, *, path=PathChoice.AUTO,
                         workers: int | None = None, min_replicates: int = 100) -> SweepRow:
    """Compare the mean estimated variance with the empirical variance of MMD^2.

    Runs ``cfg.replicates`` independent draws. The returned row carries the
    mean of every estimate, the empirical variance of ``mmd2`` across
    replicates and their ratio ``mean_var_total / empvar_mmd2``, which is 1
    for an unbiased variance estimator.
    """
    if cfg.replicates < min_replicates:
        raise ConfigError(f"Monte Carlo needs at least {min_replicates} replicates, got {cfg.replicates}")

    def one(r):
        x, y = generate_scenario(cfg, r)
        return estimate(x, y, cfg.kernel, path=path)

    reports = _run_replicates(one, cfg.replicates, workers)
    return _summarise(cfg.n, cfg.m, cfg.delta, cfg.seed, reports, reports[0].path.value)


def shift_sweep(cfg: ScenarioConfig, deltas, *, path=PathChoice.AUTO,
                workers: int | None = None) -> SweepResult:
    """Variance as a function of a deterministic location shift.

    Every replicate draws its base samples once; each ``delta`` then
    translates the same Y draw, so rows differ only through the shift.
    ``cfg.delta`` is ignored.
    """
    deltas = [float(d) for d in deltas]
    base = dataclasses.replace(cfg, delta=0.0)

    def one(r):
        x, y0 = generate_scenario(base, r)
        out = []
        for d in deltas:
            y = y0 if d == 0.0 else Sample(y0.data + d)
            out.append(estimate(x, y, cfg.kernel, path=path))
        return out

    per_rep = _run_replicates(one, cfg.replicates, workers)
    rows = []
    for k, d in enumerate(deltas):
        reps = [pr[k] for pr in per_rep]
        rows.append(_summarise(cfg.n, cfg.m, d, cfg.seed, reps, reps[0].path.value))
    return SweepResult(rows)


# -- benchmarks --------------------------------------------------------------


def peak_allocation(fn, *args, **kwargs) -> int:
    """Peak bytes allocated (Python and NumPy heaps) while ``fn`` runs."""
    gc.collect()
    tracemalloc.start()
    try:
        tracemalloc.reset_peak()
        base, _ = tracemalloc.get_traced_memory()
        fn(*args, **kwargs)
        _, peak = tracemalloc.get_traced_memory()
    finally:
        tracemalloc.stop()
    return peak - base


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def scaling_benchmark(sizes, ratio: float = 1.2, paths=("fast", "matrix"), *, runs: int = 20,
                      sigma: float = 1.0, seed: int = 0, matrix_cap: int = 10_000,
                      measure_memory: bool = True) -> SweepResult:
    """Wall-clock and peak-allocation scaling of both estimation paths.

    For every size and path: one untimed warm-up, ``runs`` timed calls
    (median, mean and minimum reported) and one separate call under
    :mod:`tracemalloc`. The matrix path builds whole kernel blocks, as a
    plain matrix implementation would; sizes above ``matrix_cap`` are reported
    with status ``"capped"`` and a ``MemoryError`` with status ``"oom"``.
    """
    spec = KernelSpec.laplacian(sigma)
    rows = []
    for n in sizes:
        cfg = ScenarioConfig(n=int(n), ratio=ratio, kernel=spec, seed=seed)
        x, y = generate_scenario(cfg)
        for p in paths:
            p = PathChoice(p)
            common = dict(n=cfg.n, m=cfg.m, delta=0.0, path=p.value, replicates=runs,
                          seed=seed, sigma_mean=sigma)
            if p is PathChoice.MATRIX and cfg.n > matrix_cap:
                rows.append(SweepRow(**common, status="capped"))
                continue
            if p is PathChoice.FAST:
                def call():
                    return variance_fast(x, y, spec)
            else:
                def call():
                    return variance_full(x, y, spec, tile=None)
            try:
                call()
                times = []
                for _ in range(runs):
                    t0 = time.perf_counter()
                    call()
                    times.append(time.perf_counter() - t0)
                peak = peak_allocation(call) if measure_memory else math.nan
            except MemoryError:
                rows.append(SweepRow(**common, status="oom"))
                continue
            rows.append(SweepRow(
                **common,
                time_median_s=float(np.median(times)),
                time_mean_s=float(np.mean(times)),
                time_min_s=float(np.min(times)),
                peak_alloc_bytes=float(peak),
            ))
    return SweepResult(rows)

"""``mmdvar`` command-line interface.

Exit codes
----------
0  success
1  self-test failure
2  estimator precondition violated (too few points, bad bandwidth, path not
   applicable, ...)
3  input file missing or unreadable as a sample
4  invalid command line or run configuration
5  unexpected internal error

Every nonzero exit writes exactly one JSON object on one line to stderr:
``{"error": <class>, "exit_code": <int>, "message": <text>, ...}``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from .api import MEDIAN, PathChoice, estimate_mmd2, resolve_kernel, select_path
from .errors import ConfigError, IngestionError, MmdError, ReplicateError
from .exact import check_pair, variance_full
from .fast import cross_prefix_suffix, dump_accumulators, variance_fast
from .harness import ScenarioConfig, SweepResult, monte_carlo_variance, scaling_benchmark, shift_sweep
from .kernels import KernelFamily, KernelSpec, Sample

EXIT_OK = 0
EXIT_SELFTEST = 1
EXIT_ESTIMATOR = 2
EXIT_INGEST = 3
EXIT_USAGE = 4
EXIT_INTERNAL = 5

CSV_COLUMNS = ["n", "m", "sigma", "family", "path", "mmd2", "var_t1", "var_t2", "var_total"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse would print usage text and exit 2; route it through the JSON
    # diagnostic instead
    def error(self, message):
        raise UsageError(message)


# -- ingestion ---------------------------------------------------------------


def _format_for(path: str, fmt: str) -> str:
    if fmt != "auto":
        return fmt
    return "f64" if os.path.splitext(path)[1].lower() in (".f64", ".bin", ".raw") else "csv"


def ingest(path: str, fmt: str = "auto") -> Sample:
    """Read a sample from ``path``.

    ``csv``: one observation per line, coordinates separated by commas; the
    dimension is fixed by the first row. Blank lines are skipped. ``f64``:
    raw little-endian float64 values, one univariate observation each. Errors
    name the offending 1-based line (or record) number.
    """
    fmt = _format_for(path, fmt)
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if fmt == "f64":
        if len(raw) == 0:
            raise IngestionError(f"{path} is empty", line=1)
        if len(raw) % 8:
            raise IngestionError(f"{path}: size {len(raw)} is not a multiple of 8 bytes",
                                 line=len(raw) // 8 + 1)
        vals = np.frombuffer(raw, dtype="<f8").astype(np.float64)
        bad = np.flatnonzero(~np.isfinite(vals))
        if bad.size:
            raise IngestionError("non-finite value", line=int(bad[0]) + 1)
        return Sample(vals)
    if fmt != "csv":
        raise ConfigError(f"unknown input format {fmt!r}")

    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise IngestionError(f"{path} is not UTF-8 text") from exc
    rows = []
    d = None
    for lineno, rec in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not rec or all(not f.strip() for f in rec):
            continue
        if d is None:
            d = len(rec)
        elif len(rec) != d:
            raise IngestionError(f"expected {d} columns, found {len(rec)}", line=lineno)
        try:
            vals = [float(f) for f in rec]
        except ValueError:
            raise IngestionError(f"cannot parse {','.join(rec)!r} as numbers", line=lineno) from None
        if not all(math.isfinite(v) for v in vals):
            raise IngestionError("non-finite value", line=lineno)
        rows.append(vals)
    if not rows:
        raise IngestionError(f"{path} contains no observations", line=1)
    return Sample(np.array(rows, dtype=np.float64))


# -- output ------------------------------------------------------------------


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(records: list[dict], fmt: str) -> str:
    if fmt == "json":
        body = records[0] if len(records) == 1 else records
        return json.dumps(body) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([_csv_cell(r.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# -- commands ----------------------------------------------------------------


def _kernel_options(args) -> tuple[KernelFamily, object]:
    # "--kernel median" is shorthand for a Laplacian kernel at the median
    # bandwidth
    family, sigma = args.kernel, args.sigma
    if family == MEDIAN:
        family, sigma = KernelFamily.LAPLACIAN.value, MEDIAN
    if sigma != MEDIAN:
        try:
            sigma = float(sigma)
        except ValueError:
            raise UsageError(f"--sigma must be a number or 'median', got {sigma!r}") from None
    return KernelFamily(family), sigma


def cmd_estimate(args) -> int:
    x = ingest(args.x, args.input_format)
    y = ingest(args.y, args.input_format)
    family, sigma = _kernel_options(args)
    spec = resolve_kernel(x, y, sigma, family)
    try:
        # the resolved bandwidth travels with any later failure so the
        # diagnostic can still report it
        if args.dump_accumulators and select_path(x, y, spec, args.path) is not PathChoice.FAST:
            raise ConfigError("--dump-accumulators needs the fast path")
        if args.mean_only:
            mmd2, spec, chosen = estimate_mmd2(x, y, spec, path=args.path)
            rec = {"mmd2": mmd2, "var_t1": None, "var_t2": None, "var_total": None,
                   "n": x.n, "m": y.n, "sigma": spec.sigma, "family": spec.family.value,
                   "path": chosen.value}
        else:
            check_pair(x, y, 4, what="the variance estimate")
            chosen = select_path(x, y, spec, args.path)
            if chosen is PathChoice.FAST:
                rep = variance_fast(x, y, spec, clamp=args.clamp)
            else:
                rep = variance_full(x, y, spec, clamp=args.clamp)
            rec = rep.to_dict()
    except MmdError as exc:
        exc.spec = spec
        raise
    if args.dump_accumulators:
        acc = cross_prefix_suffix(np.sort(x.values), np.sort(y.values), spec.sigma)
        with open(args.dump_accumulators, "w", encoding="utf-8", newline="") as fh:
            dump_accumulators(acc, fh)
    _emit(render([rec], args.format), args.out)
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import format_table, run_selftest

    results = run_selftest(quick=args.quick, fault_frobenius=args.inject_fault == "frobenius",
                           seed=args.seed)
    _emit(format_table(results), args.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_SELFTEST


def _parse_floats(text: str, what: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{what} must be a comma-separated list of numbers") from None


def _sweep_kernel(args):
    family, sigma = _kernel_options(args)
    return MEDIAN if sigma == MEDIAN else KernelSpec(family, sigma)


def cmd_sweep(args) -> int:
    deltas = _parse_floats(args.deltas, "--deltas")
    kernel = _sweep_kernel(args)
    cfg = ScenarioConfig(n=args.n, ratio=args.ratio, kernel=kernel, replicates=args.replicates,
                         seed=args.seed)
    if args.independent:
        # each shift gets its own derived seed so draws do not repeat across rows
        rows = []
        for k, d in enumerate(deltas):
            seed = int(np.random.SeedSequence([cfg.seed, k]).generate_state(1, np.uint64)[0])
            sub = ScenarioConfig(n=cfg.n, ratio=cfg.ratio, delta=d, kernel=kernel,
                                 replicates=cfg.replicates, seed=seed)
            rows.append(monte_carlo_variance(sub, path=args.path, min_replicates=2))
        result = SweepResult(rows)
    else:
        result = shift_sweep(cfg, deltas, path=args.path)
    _emit(result.to_json() + "\n" if args.format == "json" else result.to_csv(), args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    sizes = [int(s) for s in _parse_floats(args.sizes, "--sizes")]
    paths = [p.strip() for p in args.paths.split(",") if p.strip()]
    for p in paths:
        if p not in ("fast", "matrix"):
            raise UsageError(f"unknown path {p!r} in --paths")
    result = scaling_benchmark(sizes, ratio=args.ratio, paths=paths, runs=args.runs,
                               sigma=args.sigma_value, seed=args.seed,
                               matrix_cap=args.matrix_cap, measure_memory=not args.no_memory)
    _emit(result.to_json() + "\n" if args.format == "json" else result.to_csv(), args.out)
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out", metavar="PATH", help="write output here instead of stdout")


def _kernel_args(p: argparse.ArgumentParser, default_sigma: str = MEDIAN) -> None:
    p.add_argument("--kernel", choices=["laplacian", "gaussian", MEDIAN], default="laplacian")
    p.add_argument("--sigma", default=default_sigma, metavar="{REAL|median}")
    p.add_argument("--path", choices=[c.value for c in PathChoice], default="auto")


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mmdvar", description="Unbiased MMD^2 and its finite-sample variance.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("estimate", help="MMD^2 and variance for two data files")
    p.add_argument("--x", required=True, metavar="PATH")
    p.add_argument("--y", required=True, metavar="PATH")
    p.add_argument("--input-format", choices=["auto", "csv", "f64"], default="auto")
    _kernel_args(p)
    p.add_argument("--mean-only", action="store_true",
                   help="report MMD^2 only; variance fields are null (allows n, m >= 2)")
    p.add_argument("--clamp", action="store_true", help="floor the second-order variance at 0")
    p.add_argument("--dump-accumulators", metavar="PATH",
                   help="write the merged cross accumulators (fast path only)")
    p.add_argument("--seed", type=_positive_int, default=0, help="accepted for uniformity; unused")
    _common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("selftest", help="run the built-in oracle suites")
    p.add_argument("--quick", action="store_true")
    p.add_argument("--inject-fault", choices=["frobenius"],
                   help="deliberately corrupt one computation to check the suites catch it")
    p.add_argument("--seed", type=_positive_int, default=0)
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_selftest)

    p = sub.add_parser("sweep", help="Monte Carlo variance against a location shift")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--ratio", type=float, default=1.0, help="m = round(ratio * n)")
    p.add_argument("--deltas", default="0,0.25,0.5,0.75,1")
    p.add_argument("--replicates", type=_positive_int, default=100)
    p.add_argument("--seed", type=_positive_int, default=0)
    p.add_argument("--independent", action="store_true",
                   help="fresh draws per shift instead of translating one base draw")
    _kernel_args(p)
    _common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bench", help="runtime and memory scaling of both paths")
    p.add_argument("--sizes", default="10000,100000,1000000")
    p.add_argument("--ratio", type=float, default=1.2)
    p.add_argument("--paths", default="fast,matrix")
    p.add_argument("--runs", type=_positive_int, default=20)
    p.add_argument("--sigma", dest="sigma_value", type=float, default=1.0)
    p.add_argument("--seed", type=_positive_int, default=0)
    p.add_argument("--matrix-cap", type=_positive_int, default=10_000)
    p.add_argument("--no-memory", action="store_true")
    _common(p)
    p.set_defaults(func=cmd_bench)
    return parser


def _code_for(exc: BaseException) -> int:
    if isinstance(exc, ReplicateError):
        return _code_for(exc.cause)
    if isinstance(exc, IngestionError):
        return EXIT_INGEST
    if isinstance(exc, (ConfigError, UsageError)):
        return EXIT_USAGE
    return EXIT_ESTIMATOR


def _diagnose(exc: BaseException, code: int) -> None:
    rec = {"error": type(exc).__name__, "exit_code": code, "message": str(exc)}
    line = getattr(exc, "line", None)
    if line is not None:
        rec["line"] = line
    spec = getattr(exc, "spec", None)
    if spec is not None:
        rec["sigma"] = spec.sigma
        rec["family"] = spec.family.value
    sys.stderr.write(json.dumps(rec) + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (MmdError, UsageError) as exc:
        code = _code_for(exc)
        _diagnose(exc, code)
        return code
    except OSError as exc:
        # output files that cannot be written
        err = ConfigError(f"{exc.filename or ''}: {exc.strerror or exc}".lstrip(": "))
        _diagnose(err, EXIT_USAGE)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - last resort keeps the diagnostic contract
        _diagnose(exc, EXIT_INTERNAL)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

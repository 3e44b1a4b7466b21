"""Command line front end: ``generate``, ``invert``, ``roundtrip`` and ``check``.

Exit codes
----------
0  success (for ``invert``: every gated residual below tolerance)
1  ``invert`` finished but a residual exceeded tolerance
2  malformed input, bad flags or I/O failure
3  inconsistent data; the failing check is named on stderr
4  degenerate spectrum or ill-conditioned measure
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .core import (
    DegenerateSpectrumError,
    ExtraDatum,
    IllConditionedMeasureError,
    InconsistentDataError,
    RecoveryProblem,
    SpectralError,
    StructuralError,
    TwoSpectra,
)
from .forward import generate_instance
from .inverse import MODES, RESIDUAL_TOL, ROOT_TOL, check_two_spectra, recover

EXIT_OK = 0
EXIT_RESIDUAL = 1
EXIT_SCHEMA = 2
EXIT_INCONSISTENT = 3
EXIT_DEGENERATE = 4

THREADS_ENV = "JACOBI_INVERSE_THREADS"
RESEED_STRIDE = 100_000

CSV_FIELDS = (
    "seed", "n", "hidden", "mode", "instance_seed",
    "matrix_error", "nu_error", "h2_error", "runtime_s", "status",
)


# ---------------------------------------------------------------------------
# flag parsing


def parse_range(text, positive=False):
    """Parse ``lo:hi`` into a float pair."""
    try:
        lo, hi = (float(part) for part in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}") from None
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
        raise argparse.ArgumentTypeError(f"invalid interval {text!r}")
    if positive and lo <= 0:
        raise argparse.ArgumentTypeError(f"range {text!r} must be strictly positive")
    return lo, hi


def parse_offdiag_range(text):
    return parse_range(text, positive=True)


def parse_seeds(text):
    """``7`` or ``lo:hi`` (inclusive)."""
    try:
        if ":" in text:
            lo, hi = (int(part) for part in text.split(":"))
            if lo > hi:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected SEED or LO:HI, got {text!r}") from None


def parse_int_list(text):
    try:
        values = [int(part) for part in text.split(",") if part]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("sizes must be positive")
    return values


def parse_hidden(text):
    """Hidden-set specification: a comma list of 1-based indices or of fractions.

    Items that are all integers ``>= 1`` form one explicit index set;
    otherwise every item is a fraction in ``[0, 1]`` and each one is a
    separate sweep value.
    """
    items = [part.strip() for part in text.split(",") if part.strip()]
    if not items:
        raise argparse.ArgumentTypeError("empty --hidden")
    try:
        ints = [int(item) for item in items]
        if all(i >= 1 for i in ints):
            return [tuple(sorted(set(ints)))]
    except ValueError:
        pass
    try:
        fractions = [float(item) for item in items]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid --hidden {text!r}") from None
    if any(not 0.0 <= f <= 1.0 for f in fractions):
        raise argparse.ArgumentTypeError("hidden fractions must lie in [0, 1]")
    return fractions


def parse_modes(text):
    modes = [part.strip() for part in text.split(",") if part.strip()]
    bad = [m for m in modes if m not in MODES]
    if not modes or bad:
        raise argparse.ArgumentTypeError(f"unknown mode(s) {bad}; choose from {', '.join(MODES)}")
    return modes


def sweep_threads():
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        value = int(raw)
    except ValueError:
        raise StructuralError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise StructuralError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


# ---------------------------------------------------------------------------
# JSON helpers


def dump_json(record, path):
    text = json.dumps(record, indent=2, allow_nan=False) + "\n"
    Path(path).write_text(text)


def load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise StructuralError(f"cannot read {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# roundtrip problems


def hidden_indices(seed, n, spec):
    """Deterministic hidden set: explicit indices, or ``round(spec * n)`` drawn per ``(seed, n)``."""
    if isinstance(spec, tuple):
        if any(i > n for i in spec):
            raise StructuralError(f"hidden index above n={n}")
        return list(spec)
    k = int(round(spec * n))
    rng = np.random.default_rng([seed, n])
    return sorted(int(i) for i in rng.choice(np.arange(1, n + 1), size=k, replace=False))


def build_problem(instance, mode, hidden):
    """Recovery problem of the given ``mode`` built from a generated instance.

    ``ip2``/``nip2`` reveal ``nu`` at the hidden index with the largest
    weight; ``ip3`` and ``nip3`` add the largest weight among the indices
    outside both the hidden and the weight sets.  A large weight means a wide
    gap ``|nu_m - lambda_m|``, which keeps the recovered constant well
    conditioned.  Non-matching modes place the weights on the smallest indices
    outside the hidden set.
    Raises :class:`StructuralError` when the mode cannot be posed.
    """
    ts = instance.two_spectra
    mu = instance.datum_h1.weights
    n = ts.n
    hidden = sorted(hidden) if mode != "twospectra" else []
    known_nu = {i: float(ts.nu[i - 1]) for i in range(1, n + 1) if i not in hidden}
    free = [i for i in range(1, n + 1) if i not in hidden]
    if mode.startswith("nip"):
        if len(free) < len(hidden):
            raise StructuralError(f"{mode}: no disjoint weight set of size {len(hidden)}")
        weight_idx = free[: len(hidden)]
    elif mode == "twospectra":
        weight_idx = []
    else:
        weight_idx = hidden
    weights = {k: float(mu[k - 1]) for k in weight_idx}
    h1, h2, extra = ts.h1, ts.h2, None
    if mode.endswith("2"):
        if not hidden:
            raise StructuralError(f"{mode} needs at least one hidden index")
        m = max(hidden, key=lambda i: mu[i - 1])
        extra, h2 = ExtraDatum("nu", m, float(ts.nu[m - 1])), None
    elif mode.endswith("3"):
        spare = [i for i in free if i not in weight_idx]
        if not spare:
            raise StructuralError(f"{mode} needs an index outside the hidden and weight sets")
        m = max(spare, key=lambda i: mu[i - 1])
        extra, h2 = ExtraDatum("weight", m, float(mu[m - 1])), None
    return RecoveryProblem(ts.lam, hidden, known_nu, weights, h1, h2, extra)


def _status(exc):
    if isinstance(exc, InconsistentDataError):
        return f"inconsistent:{exc.check}"
    if isinstance(exc, IllConditionedMeasureError):
        return f"ill-conditioned:{exc.index}"
    if isinstance(exc, DegenerateSpectrumError):
        return "degenerate"
    if isinstance(exc, StructuralError):
        return "skipped"
    return "error"


def roundtrip_row(seed, n, hidden_spec, mode, diag_range=(-2.0, 2.0), offdiag_range=(0.5, 2.0),
                  h1=0.7, h2=-0.4, reseed=0, tol=0.0):
    """Generate, hide, recover and compare one instance; returns a CSV row dict."""
    start = time.perf_counter()
    row = {"seed": seed, "n": n, "mode": mode, "hidden": "", "instance_seed": "",
           "matrix_error": "", "nu_error": "", "h2_error": ""}
    instance = None
    for attempt in range(reseed + 1):
        instance_seed = seed + attempt * RESEED_STRIDE
        try:
            instance = generate_instance(instance_seed, n, diag_range, offdiag_range, h1, h2, tol)
            break
        except SpectralError as exc:
            failure = exc
    if instance is None:
        row.update(status=_status(failure), runtime_s=f"{time.perf_counter() - start:.6f}")
        return row
    row["instance_seed"] = instance_seed
    try:
        hidden = hidden_indices(seed, n, hidden_spec)
        row["hidden"] = 0 if mode == "twospectra" else len(hidden)
        result = recover(build_problem(instance, mode, hidden), mode)
    except SpectralError as exc:
        row.update(status=_status(exc), runtime_s=f"{time.perf_counter() - start:.6f}")
        return row
    true = instance.matrix
    ts = instance.two_spectra
    row["matrix_error"] = float(max(np.max(np.abs(result.matrix.diag - true.diag)),
                                    np.max(np.abs(result.matrix.offdiag - true.offdiag), initial=0.0)))
    row["nu_error"] = float(np.max(np.abs(result.nu_full - ts.nu) / np.maximum(1.0, np.abs(ts.nu))))
    row["h2_error"] = abs(result.h2 - ts.h2)
    row["status"] = "ok" if result.ok() else "residual:" + "+".join(result.failing())
    row["runtime_s"] = f"{time.perf_counter() - start:.6f}"
    return row


def _summarize(rows, stream):
    groups = {}
    for row in rows:
        groups.setdefault((row["n"], row["mode"]), []).append(row)
    for (n, mode), items in sorted(groups.items()):
        done = [r for r in items if r["matrix_error"] != ""]
        passed = sum(r["matrix_error"] <= RESIDUAL_TOL and r["nu_error"] <= RESIDUAL_TOL for r in done)
        worst_m = max((r["matrix_error"] for r in done), default=float("nan"))
        worst_nu = max((r["nu_error"] for r in done), default=float("nan"))
        print(
            f"n={n} mode={mode}: {len(items)} instances, {len(done)} recovered, "
            f"{passed} within {RESIDUAL_TOL:g}; max matrix error {worst_m:.3e}, max nu error {worst_nu:.3e}",
            file=stream,
        )


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args):
    try:
        instance = generate_instance(args.seed, args.n, args.diag_range, args.offdiag_range,
                                     args.h1, args.h2, args.tol if args.tol is not None else 0.0)
    except DegenerateSpectrumError as exc:
        print(f"degenerate instance for seed {args.seed}: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = {**instance.metadata(), "diag_range": list(args.diag_range),
            "offdiag_range": list(args.offdiag_range)}
    dump_json({**instance.matrix.to_dict(), "meta": meta}, out / "matrix.json")
    dump_json({"spectra": [instance.datum_h1.to_dict(), instance.datum_h2.to_dict()], "meta": meta},
              out / "spectra.json")
    dump_json({**instance.two_spectra.to_dict(), "meta": meta}, out / "twospectra.json")
    print(f"wrote {out / 'matrix.json'}, {out / 'spectra.json'}, {out / 'twospectra.json'}")
    return EXIT_OK


def cmd_invert(args):
    problem = RecoveryProblem.from_dict(load_json(args.problem))
    tol = args.tol if args.tol is not None else ROOT_TOL
    result = recover(problem, args.mode, tol=tol)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dump_json(result.to_dict(), out / "result.json")
    for name, value in result.diagnostics.items():
        print(f"{name} = {value:.3e}")
    if not result.ok():
        print(f"residuals above {RESIDUAL_TOL:g}: {', '.join(result.failing())}", file=sys.stderr)
        return EXIT_RESIDUAL
    return EXIT_OK


def cmd_roundtrip(args):
    tasks = [
        (seed, n, spec, mode)
        for seed in args.seed
        for n in args.n
        for spec in args.hidden
        for mode in args.mode
    ]
    tol = args.tol if args.tol is not None else 0.0

    def run(task):
        seed, n, spec, mode = task
        return roundtrip_row(seed, n, spec, mode, args.diag_range, args.offdiag_range,
                             args.h1, args.h2, args.reseed, tol)

    with ThreadPoolExecutor(max_workers=sweep_threads()) as pool:
        rows = list(pool.map(run, tasks))
    rows.sort(key=lambda r: (r["seed"], r["n"]))
    if args.out:
        with open(args.out, "w", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=CSV_FIELDS)
            writer.writeheader()
            writer.writerows(rows)
        summary = sys.stdout
    else:
        writer = csv.DictWriter(sys.stdout, fieldnames=CSV_FIELDS)
        writer.writeheader()
        writer.writerows(rows)
        summary = sys.stderr
    _summarize(rows, summary)
    return EXIT_OK


def cmd_check(args):
    ts = TwoSpectra.from_dict(load_json(args.twospectra))
    report = check_two_spectra(ts)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.ok else EXIT_INCONSISTENT


# ---------------------------------------------------------------------------


def _add_instance_flags(parser):
    parser.add_argument("--diag-range", type=parse_range, default=(-2.0, 2.0), metavar="LO:HI",
                        help="uniform range of the diagonal entries (default -2:2)")
    parser.add_argument("--offdiag-range", type=parse_offdiag_range, default=(0.5, 2.0), metavar="LO:HI",
                        help="uniform range of the off-diagonal entries, strictly positive (default 0.5:2)")
    parser.add_argument("--h1", type=float, default=0.7)
    parser.add_argument("--h2", type=float, default=-0.4)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="jacobi-inverse",
        description="Forward and inverse spectral problems for finite Jacobi matrices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a random instance and its spectral data")
    gen.add_argument("--seed", type=int, default=1)
    gen.add_argument("--n", type=int, default=8)
    _add_instance_flags(gen)
    gen.add_argument("--tol", type=float, default=None,
                     help="eigenvalue bisection tolerance (default 0: full double precision)")
    gen.add_argument("--out", default=".", help="output directory")
    gen.set_defaults(func=cmd_generate)

    inv = sub.add_parser("invert", help="solve a recovery problem")
    inv.add_argument("problem", help="RecoveryProblem JSON file")
    inv.add_argument("--mode", required=True, choices=MODES)
    inv.add_argument("--tol", type=float, default=None,
                     help=f"root-finding tolerance (default {ROOT_TOL:g})")
    inv.add_argument("--out", default=".", help="output directory for result.json")
    inv.set_defaults(func=cmd_invert)

    rt = sub.add_parser("roundtrip", help="generate, hide, recover and compare over a sweep")
    rt.add_argument("--seed", type=parse_seeds, default=parse_seeds("1:100"), metavar="SEED|LO:HI")
    rt.add_argument("--n", type=parse_int_list, default=[8], metavar="N[,N...]")
    rt.add_argument("--hidden", type=parse_hidden, default=[0.25], metavar="FRACTIONS|INDICES",
                    help="hidden fractions (e.g. 0.25,0.5) or one explicit 1-based index list (e.g. 2,5)")
    rt.add_argument("--mode", type=parse_modes, default=["ip1"], metavar="MODE[,MODE...]")
    _add_instance_flags(rt)
    rt.add_argument("--reseed", type=int, default=0,
                    help=f"on a degenerate instance retry with seed + k*{RESEED_STRIDE}, k <= RESEED")
    rt.add_argument("--tol", type=float, default=None,
                    help="eigenvalue bisection tolerance for generation (default 0)")
    rt.add_argument("--out", default=None, help="CSV file (default: stdout, summary on stderr)")
    rt.set_defaults(func=cmd_roundtrip)

    chk = sub.add_parser("check", help="check the two-spectra conditions")
    chk.add_argument("twospectra", help="TwoSpectra JSON file")
    chk.set_defaults(func=cmd_check)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InconsistentDataError as exc:
        print(f"inconsistent data: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except (DegenerateSpectrumError, IllConditionedMeasureError) as exc:
        print(f"degenerate: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (SpectralError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())

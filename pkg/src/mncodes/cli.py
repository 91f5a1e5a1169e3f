"""Command-line front end: ``mncodes <subcommand> ...``.

Exit status is 0 on success, 2 on configuration errors (bad flags, unknown
presets, malformed files, out-of-range rates) and 1 on runtime failures.
Every subcommand that writes an artifact also writes a JSON manifest holding
the argument vector, resolved configuration and code hash; ``replay``
re-runs a manifest.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import math
import os
import sys
from importlib import metadata
from pathlib import Path

import numpy as np

from .protograph import BaseMatrix, LiftedCode, UnliftableError, lift, preset, validate
from .ratemath import binary_entropy, omega_for_rate, outer_rate_finite

THREADS_ENV = "MNCODES_THREADS"


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# ---- shared resolution -------------------------------------------------------

def _load_base(args) -> BaseMatrix:
    if getattr(args, "base", None):
        try:
            base = BaseMatrix.load(args.base)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read base matrix {args.base}: {exc}") from exc
    else:
        try:
            base = preset(args.preset)
        except KeyError as exc:
            raise ConfigError(f"unknown preset {args.preset!r}") from exc
    problems = validate(base)
    if problems:
        raise ConfigError("invalid base matrix: " + "; ".join(problems))
    return base


def _load_code(args) -> LiftedCode:
    if getattr(args, "code", None):
        try:
            return LiftedCode.from_shift_table_text(Path(args.code).read_text())
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read shift table {args.code}: {exc}") from exc
    base = _load_base(args)
    try:
        return lift(base, args.ell, seed=args.lift_seed, allow_collapse=args.allow_collapse)
    except UnliftableError as exc:
        raise ConfigError(str(exc)) from exc


def _resolve_omega(args, inner_rate: float) -> tuple[float, float | None]:
    if args.omega is not None:
        if not 0.0 < args.omega <= 0.5:
            raise ConfigError("omega must lie in (0, 0.5]")
        return args.omega, None
    rate = args.target_rate
    if rate is None:
        raise ConfigError("give --target-rate or --omega")
    if not 0.0 < rate <= inner_rate:
        raise ConfigError(f"target rate {rate} outside (0, R_I={inner_rate:g}]")
    return omega_for_rate(rate, inner_rate), rate


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def _snr_grid(args) -> list[float]:
    if args.snr_range:
        try:
            a, b, step = (float(t) for t in args.snr_range.split(":"))
        except ValueError as exc:
            raise ConfigError("--snr-range takes start:stop:step") from exc
        if step <= 0:
            raise ConfigError("--snr-range step must be positive")
        return [round(x, 10) for x in np.arange(a, b + step / 2, step)]
    return _floats(args.snr or "")


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    return max(1, int(os.environ.get(THREADS_ENV, "1")))


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def write_manifest(path, argv, command: str, config: dict, seeds: dict | None = None) -> None:
    doc = {
        "subcommand": command,
        "argv": list(argv),
        "config": config,
        "seeds": seeds or {},
        "version": _version(),
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _manifest_path(args, out) -> str:
    return args.manifest or f"{out}.manifest.json"


def _code_flags(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--preset", default="b12", help="named base matrix (b12, b23)")
    src.add_argument("--base", help="base-matrix text file")
    src.add_argument("--code", help="shift-table file written by codegen")
    p.add_argument("--ell", type=int, default=300, help="lifting factor")
    p.add_argument("--lift-seed", type=int, default=0)
    p.add_argument("--allow-collapse", action="store_true",
                   help="permit ell below the largest base entry (parallel edges merge)")


def _rate_flags(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--target-rate", type=float)
    g.add_argument("--omega", type=float)


# ---- subcommands ---------------------------------------------------------------

def cmd_rates(args, argv, out):
    base = _load_base(args)
    r_i = float(base.inner_rate)
    omega, rate = _resolve_omega(args, r_i)
    h = args.h if args.h is not None else args.ell * base.h0
    w = round(omega * h)
    rows = [
        ("inner_rate", r_i),
        ("mother_rate", float(base.mother_rate)),
        ("outer_rate", binary_entropy(omega)),
        ("omega", omega),
        ("h", h),
        ("w", w),
        ("outer_rate_finite", outer_rate_finite(h, w) if 0 <= w <= h else math.nan),
        ("overall_rate_finite", outer_rate_finite(h, w) * r_i if 0 <= w <= h else math.nan),
    ]
    if rate is not None:
        rows.insert(0, ("target_rate", rate))
    for k, v in rows:
        out.write(f"{k}={v:.10g}\n" if isinstance(v, float) else f"{k}={v}\n")
    return 0


def cmd_analyze(args, argv, out):
    from .analysis.density import DEFAULT_BIN_WIDTH, de_threshold
    from .analysis.jfunc import shannon_limit
    from .analysis.pexit import pexit_threshold

    base = _load_base(args)
    r_i = float(base.inner_rate)
    rates = _floats(args.rates)
    for r in rates:
        if not 0.0 < r <= r_i:
            raise ConfigError(f"rate {r} outside (0, R_I={r_i:g}]")
    bw = args.bin_width or DEFAULT_BIN_WIDTH
    rows = []
    for r in rates:
        omega = omega_for_rate(r, r_i)
        pex = pexit_threshold(base, omega, r, tol_db=args.tol).gamma_star
        de = de_threshold(base, omega, r, tol_db=args.tol, bin_width=bw).gamma_star if args.de else math.nan
        sh = shannon_limit(r)
        best = de if args.de else pex
        rows.append((r, omega, pex, de, sh, best - sh))
    header = ("rate", "omega", "pexit_dB", "de_dB", "shannon_dB", "gap_dB")
    _emit_csv(args.out, header, rows, out)
    if args.out:
        write_manifest(_manifest_path(args, args.out), argv, "analyze",
                       {"base": base.entries.tolist(), "h0": base.h0, "rates": rates, "de": args.de,
                        "bin_width": bw, "tol_db": args.tol})
    return 0


def cmd_codegen(args, argv, out):
    base = _load_base(args)
    try:
        code = lift(base, args.ell, seed=args.lift_seed)
    except UnliftableError as exc:
        raise ConfigError(str(exc)) from exc
    Path(args.out).write_text(code.shift_table_text())
    write_manifest(_manifest_path(args, args.out), argv, "codegen",
                   {"base": base.entries.tolist(), "h0": base.h0, "ell": args.ell,
                    "code_hash": code.content_hash()},
                   {"requested": args.lift_seed, "used": code.seed})
    out.write(f"wrote {args.out} (n={code.n}, h={code.h}, seed={code.seed}, sha256={code.content_hash()})\n")
    return 0


def cmd_simulate(args, argv, out):
    from .matcher import MatcherSpec
    from .simharness import MODES, SimConfig, sweep, write_csv

    code = _load_code(args)
    omega, rate = _resolve_omega(args, float(code.base.inner_rate))
    spec = MatcherSpec.from_omega(code.h, omega)
    if args.mode not in MODES:
        raise ConfigError(f"unknown mode {args.mode!r}")
    cfg = SimConfig(code, spec, _snr_grid(args), args.mode, args.max_iter, args.min_errors,
                    args.max_frames, args.seed, _threads(args), args.fer_floor)
    points = sweep(cfg)
    write_csv(points, args.out)
    write_manifest(_manifest_path(args, args.out), argv, "simulate",
                   {**cfg.as_dict(), "omega": omega, "target_rate": rate}, {"sim": args.seed})
    for p in points:
        lo, hi = p.wilson()
        out.write(f"{p.snr_db:+.3f} dB  frames={p.frames}  errors={p.frame_errors}  "
                  f"fer={p.fer:.3e}  ci=[{lo:.3e}, {hi:.3e}]\n")
    return 0


def cmd_bound(args, argv, out):
    from .errorfloor import (PepParams, enumerate_low_weight, exhaustive_spectrum, load_spectrum,
                             save_spectrum, truncated_union_bound, union_bound)

    code = _load_code(args)
    omega, _ = _resolve_omega(args, float(code.base.inner_rate))
    w = round(omega * code.h)
    complete = False
    if args.spectrum_in:
        spectrum = load_spectrum(args.spectrum_in)
    elif args.exhaustive:
        spectrum, complete = exhaustive_spectrum(code), True
    else:
        spectrum = enumerate_low_weight(code, budget=args.budget, seed=args.seed).spectrum
    if args.spectrum_out:
        save_spectrum(spectrum, args.spectrum_out)
    rows = []
    for snr in _snr_grid(args):
        params = PepParams.from_snr(code.h, w, snr)
        ub = union_bound(spectrum, params, complete=complete)
        if spectrum:
            tub = truncated_union_bound(spectrum, params)
            rows.append((snr, ub.value, tub.value, tub.dominant.delta1, tub.dominant.delta2))
        else:
            rows.append((snr, 0.0, 0.0, "", ""))
    header = ("snr_db", "ub", "tub", "dominant_delta1", "dominant_delta2")
    _emit_csv(args.out, header, rows, out)
    if args.out:
        write_manifest(_manifest_path(args, args.out), argv, "bound",
                       {"code_hash": code.content_hash(), "h": code.h, "w": w, "complete": complete,
                        "budget": args.budget}, {"enumeration": args.seed})
    return 0


def cmd_optimize(args, argv, out):
    from .optimizer import SearchSpec, optimize

    try:
        initial = tuple(preset(p) for p in args.inject or ())
    except KeyError as exc:
        raise ConfigError(f"unknown preset {exc}") from exc
    try:
        spec = SearchSpec(args.m0, args.n0_total, args.h0, _floats(args.rates), args.max_entry,
                          args.population, args.generations, args.F, args.CR, args.seed,
                          initial=initial)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    result = optimize(spec, threads=_threads(args))
    top = result.population[: args.top]
    with open(args.out, "w") as fh:
        for c in top:
            fh.write(f"# wcl_dB={c.wcl_db!r} gaps_dB={[float(g) for g in c.per_rate_gaps]}\n")
            fh.write(c.base.to_text())
    log = {
        "history": result.history,
        "population": [{"base": c.base.entries.tolist(), "wcl_dB": c.wcl_db,
                        "gaps_dB": [float(g) for g in c.per_rate_gaps]} for c in result.population],
    }
    Path(args.log or f"{args.out}.log.json").write_text(json.dumps(log, indent=1) + "\n")
    write_manifest(_manifest_path(args, args.out), argv, "optimize", spec.as_dict(), {"de": args.seed})
    out.write(f"best WCL {result.best.wcl_db:.4f} dB\n")
    return 0


def cmd_replay(args, argv, out):
    try:
        doc = json.loads(Path(args.manifest_file).read_text())
        stored = doc["argv"]
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read manifest {args.manifest_file}: {exc}") from exc
    return main(stored, out)


def _emit_csv(path, header, rows, out):
    fh = open(path, "w", newline="") if path else out
    try:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    finally:
        if path:
            fh.close()


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mncodes", description="Rate-adaptive protograph MacKay-Neal codes.")
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker threads (default: ${THREADS_ENV} or 1)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    q = sub.add_parser("rates", help="rate and composition arithmetic")
    q.add_argument("--preset", default="b12")
    q.add_argument("--base")
    q.add_argument("--ell", type=int, default=300)
    q.add_argument("--h", type=int, help="matcher length (default ell*h0)")
    _rate_flags(q)
    q.set_defaults(func=cmd_rates)

    q = sub.add_parser("analyze", help="PEXIT / quantized-DE thresholds")
    q.add_argument("--preset", default="b12")
    q.add_argument("--base")
    q.add_argument("--rates", default="0.1,0.2,0.3,0.4,0.5")
    q.add_argument("--de", action="store_true", help="also run quantized density evolution")
    q.add_argument("--bin-width", type=float)
    q.add_argument("--tol", type=float, default=0.01, help="bisection tolerance in dB")
    q.add_argument("--out")
    q.add_argument("--manifest")
    q.set_defaults(func=cmd_analyze)

    q = sub.add_parser("codegen", help="lift a base matrix and write its shift table")
    q.add_argument("--preset", default="b12")
    q.add_argument("--base")
    q.add_argument("--ell", type=int, default=300)
    q.add_argument("--lift-seed", type=int, default=0)
    q.add_argument("--out", required=True)
    q.add_argument("--manifest")
    q.set_defaults(func=cmd_codegen)

    q = sub.add_parser("simulate", help="Monte Carlo FER sweep")
    _code_flags(q)
    _rate_flags(q)
    q.add_argument("--snr", help="comma-separated Es/N0 values in dB")
    q.add_argument("--snr-range", help="start:stop:step in dB")
    q.add_argument("--mode", default="epc_allzero")
    q.add_argument("--max-iter", type=int, default=100)
    q.add_argument("--min-errors", type=int, default=100)
    q.add_argument("--max-frames", type=int, default=10_000_000)
    q.add_argument("--fer-floor", type=float)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", required=True)
    q.add_argument("--manifest")
    q.set_defaults(func=cmd_simulate)

    q = sub.add_parser("bound", help="union bound / truncated union bound")
    _code_flags(q)
    _rate_flags(q)
    q.add_argument("--snr")
    q.add_argument("--snr-range")
    q.add_argument("--exhaustive", action="store_true", help="complete spectrum (tiny codes only)")
    q.add_argument("--budget", type=int, default=5000, help="impulse decodes for enumeration")
    q.add_argument("--spectrum-in")
    q.add_argument("--spectrum-out")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out")
    q.add_argument("--manifest")
    q.set_defaults(func=cmd_bound)

    q = sub.add_parser("optimize", help="differential-evolution base-matrix search")
    q.add_argument("--m0", type=int, default=4)
    q.add_argument("--n0-total", type=int, default=6)
    q.add_argument("--h0", type=int, default=2)
    q.add_argument("--rates", default="0.1,0.3,0.5")
    q.add_argument("--max-entry", type=int, default=3)
    q.add_argument("--population", type=int)
    q.add_argument("--generations", type=int, default=200)
    q.add_argument("--F", type=float, default=0.8)
    q.add_argument("--CR", type=float, default=0.9)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--inject", action="append", help="preset name to seed the population with")
    q.add_argument("--top", type=int, default=5)
    q.add_argument("--out", required=True)
    q.add_argument("--log")
    q.add_argument("--manifest")
    q.set_defaults(func=cmd_optimize)

    q = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    q.add_argument("manifest_file")
    q.set_defaults(func=cmd_replay)
    return p


def main(argv=None, out=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, argv, out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface: ``cfruns <command> ...``.

Exit codes: 0 success, 1 bound violation, 2 precision exhausted / malformed
input / invalid configuration, 3 rational expansion terminated, 4 budget
exceeded, 64 usage error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import platform
import sys
import warnings
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import List, Optional

import jsonschema
import numpy as np

from . import __version__
from .cf_engine import BUILTIN_CONSTANTS, CertifiedReal, Convergent, cylinder_of, expand, from_rational
from .envelope import CheckpointSchedule, ratio_law_report, run_experiment
from .errors import (AssumptionUnsatisfiable, EmptyWord, PrecisionExhausted,
                     RationalTerminated, ScheduleTooLarge, TooLarge)
from .gauss_model import _fmt, check_assumption2, check_assumption3, cylinder_measure
from .process_lab import (AssumptionParams, ProcessSpec, brute_force_distribution,
                          derive_params, iid_longest_run_cdf)
from .run_stats import RunState, iter_tokens, summary

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INPUT = 2
EXIT_RATIONAL = 3
EXIT_BUDGET = 4
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _int_list(text: str) -> List[int]:
    out = []
    for part in text.replace(" ", "").split(","):
        if "-" in part[1:]:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    return out


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


# -- expand -------------------------------------------------------------------

def _decimal_real(text: str, tolerance_digits: Optional[int]) -> CertifiedReal:
    value = Fraction(text)
    if tolerance_digits is None:
        return from_rational(value, name=text)
    eps = Fraction(1, 10 ** tolerance_digits)
    lo, hi = max(value - eps, Fraction(0)), min(value + eps, Fraction(1))
    return CertifiedReal(lo, hi, None, text)


def cmd_expand(args) -> int:
    if args.const:
        x = BUILTIN_CONSTANTS[args.const]()
    elif args.decimal is not None:
        x = _decimal_real(args.decimal, args.tolerance_digits)
    else:
        x = from_rational(Fraction(args.rational))
    try:
        digits = expand(x, args.count, max_bits=args.max_bits)
    except RationalTerminated as exc:
        print(" ".join(map(str, exc.digits)))
        _err(f"expansion terminated after {len(exc.digits)} digits (rational input)")
        return EXIT_RATIONAL
    except PrecisionExhausted as exc:
        if exc.digits:
            print(" ".join(map(str, exc.digits)))
        _err(f"precision exhausted: {exc}")
        return EXIT_INPUT
    print(" ".join(map(str, digits)))
    return EXIT_OK


# -- runstats -----------------------------------------------------------------

def _parse_tokens(tokens: List[str]) -> np.ndarray:
    try:
        arr = np.array(tokens, dtype=np.int64)
    except OverflowError:
        arr = np.array([int(t) for t in tokens], dtype=object)
    if (arr < 1).any():
        raise ValueError("digits must be positive integers")
    return arr


def cmd_runstats(args) -> int:
    state = RunState()
    fp = sys.stdin if args.file in (None, "-") else open(args.file, encoding="utf-8")
    try:
        for tokens in iter_tokens(fp):
            try:
                arr = _parse_tokens(tokens)
            except ValueError:
                bad = next((t for t in tokens if not t.isdigit() or int(t) < 1), tokens[0])
                _err(f"malformed token {bad!r} after {state.n} symbols")
                return EXIT_INPUT
            state.feed(arr)
    finally:
        if fp is not sys.stdin:
            fp.close()
    out = summary(state, args.symbol or ())
    print(json.dumps(out, separators=(",", ":")))
    return EXIT_OK


# -- cylinder -----------------------------------------------------------------

def cmd_cylinder(args) -> int:
    digits = _int_list(args.word) if args.word else []
    try:
        cyl = cylinder_of(digits)
    except EmptyWord as exc:
        _err(str(exc))
        return EXIT_USAGE
    except ValueError as exc:
        _err(str(exc))
        return EXIT_INPUT
    c = Convergent.of(cyl.word)
    m = cylinder_measure(cyl.word)
    out = {
        "word": list(cyl.word),
        "left": str(cyl.left), "right": str(cyl.right),
        "diameter": str(cyl.diameter),
        "p": [c.p_prev, c.p_cur], "q": [c.q_prev, c.q_cur],
        "measure": _fmt(m.value), "measure_error": _fmt(m.error),
    }
    print(json.dumps(out, separators=(",", ":")))
    return EXIT_OK


# -- lemmas -------------------------------------------------------------------

def cmd_lemmas(args, parser) -> int:
    if args.k_max < 1:
        parser.error("--k-max must be at least 1")
    if args.truncation < 2:
        parser.error("--truncation must be at least 2")
    reports = []
    if args.suite in ("2", "both"):
        for lam in args.lambdas:
            if lam < 1:
                parser.error("lambda values must be positive")
            reports.append((f"assumption2_lambda{lam}", check_assumption2(lam, args.k_max)))
    if args.suite in ("3", "both"):
        reports.append(("assumption3", check_assumption3(args.k_max, args.truncation)))
    ok = all(r.all_pass for _, r in reports)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, r in reports:
            (out / f"{name}.csv").write_text(r.to_csv(), encoding="utf-8")
    else:
        for i, (name, r) in enumerate(reports):
            if i:
                print()
            print(f"# {name}")
            sys.stdout.write(r.to_csv())
    for name, r in reports:
        status = "pass" if r.all_pass else f"{len(r.violations)} violations"
        _err(f"{name}: {len(r.rows)} rows, {status}")
    return EXIT_OK if ok else EXIT_VIOLATION


# -- simulate -----------------------------------------------------------------

def config_schema() -> dict:
    return json.loads(resources.files("cfruns.data").joinpath("config.schema.json").read_text())


def load_config(path: str) -> dict:
    p = Path(path)
    if p.exists():
        text = p.read_text(encoding="utf-8")
    else:
        bundled = resources.files("cfruns.data").joinpath(p.name)
        if not bundled.is_file():
            raise FileNotFoundError(path)
        text = bundled.read_text(encoding="utf-8")
    cfg = json.loads(text)
    jsonschema.validate(cfg, config_schema())
    return cfg


def build_experiment(cfg: dict):
    spec = ProcessSpec.from_dict(cfg["process"])
    tracked = cfg.get("tracked")
    try:
        params = derive_params(spec, tracked)
    except AssumptionUnsatisfiable:
        if "params" not in cfg or "rho" not in cfg["params"]:
            raise
        params = None
    overrides = cfg.get("params", {})
    if overrides:
        base = params.to_dict() if params else {
            "m_star": tracked or 1, "c_minus": 1.0, "c_plus": 1.0,
            "C_1": 1.0, "C_0": 0.0, "theta": 0.5, "notes": {}}
        base.update(overrides)
        base["notes"] = {**base.get("notes", {}),
                         **{k: "configured" for k in overrides}}
        params = AssumptionParams(**base)
    sched = CheckpointSchedule(**cfg.get("schedule", {}))
    return spec, params, sched


def cmd_simulate(args) -> int:
    try:
        cfg = load_config(args.config)
        spec, params, sched = build_experiment(cfg)
    except FileNotFoundError as exc:
        _err(f"config not found: {exc}")
        return EXIT_INPUT
    except json.JSONDecodeError as exc:
        _err(f"config is not valid JSON: {exc}")
        return EXIT_INPUT
    except jsonschema.ValidationError as exc:
        _err(f"config schema violation: {exc.message}")
        return EXIT_INPUT
    except AssumptionUnsatisfiable as exc:
        _err(f"assumptions unsatisfiable: {exc}")
        return EXIT_INPUT
    except ValueError as exc:
        _err(f"invalid config: {exc}")
        return EXIT_INPUT
    c_grid = cfg.get("c_grid", [0.6, 0.75, 1.0, 1.5, 2.0])
    if any(c <= 0.5 for c in c_grid):
        _err("warning: envelopes are only asserted for c > 1/2; smaller c values are reported anyway")
    samples = args.samples or cfg.get("samples", 100)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = run_experiment(
                spec, params, sched, samples, c_grid, cfg.get("tracked"),
                cfg.get("c1", 0.75), workers=args.workers,
                max_n=cfg.get("max_n", 1 << 24))
    except ScheduleTooLarge as exc:
        _err(f"budget exceeded: {exc}")
        return EXIT_BUDGET
    except ValueError as exc:
        _err(f"invalid config: {exc}")
        return EXIT_INPUT
    except PrecisionExhausted as exc:
        _err(f"precision exhausted while sampling: {exc}")
        return EXIT_INPUT

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(report.to_csv(), encoding="utf-8")
    (out / "summary.json").write_text(report.summary_json(), encoding="utf-8")
    meta = {
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "config": str(args.config), "workers": args.workers,
        "version": __version__, "python": platform.python_version(),
    }
    (out / "metadata.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")

    cov_l, cov_r = report.coverage("L"), report.coverage("R")
    ratio = ratio_law_report(report)
    headline = max(c for c in report.c_grid if c <= 1.5) if min(report.c_grid) <= 1.5 else report.c_grid[0]
    for i, (j, n) in enumerate(zip(sched.js, sched.ns)):
        print(f"j={j} n={n} ratio_L={ratio['L']['mean'][i]:.4f} ratio_R={ratio['R']['mean'][i]:.4f} "
              f"cov_L(c={headline:g})={cov_l[headline][i]:.3f} cov_R(c={headline:g})={cov_r[headline][i]:.3f}")
    return EXIT_OK


# -- oracle -------------------------------------------------------------------

def cmd_oracle(args) -> int:
    if args.oracle == "runcdf":
        p = Fraction(args.p)
        if not 0 < p < 1:
            _err("p must lie strictly between 0 and 1")
            return EXIT_INPUT
        value = iid_longest_run_cdf(p if args.exact else float(p), args.n, args.k)
        print(str(value) if args.exact else repr(value))
        return EXIT_OK
    alphabet = _int_list(args.alphabet)
    probs = [Fraction(t) for t in args.probs.split(",")] if args.probs else \
        [Fraction(1, len(alphabet))] * len(alphabet)
    if len(probs) != len(alphabet) or sum(probs) != 1:
        _err("probs must match the alphabet and sum to 1")
        return EXIT_INPUT
    try:
        dist = brute_force_distribution(alphabet, probs, args.n, args.m_star)
    except TooLarge as exc:
        _err(str(exc))
        return EXIT_BUDGET
    rows = [{"L": l, "R": r, "prob": str(w)} for (l, r), w in sorted(dist.items())]
    print(json.dumps(rows, separators=(",", ":")))
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="cfruns", description="Longest runs of continued-fraction digits.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("expand", help="certified partial quotients")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--const", choices=sorted(BUILTIN_CONSTANTS))
    src.add_argument("--decimal", help="decimal literal in [0, 1)")
    src.add_argument("--rational", help="fraction p/q in [0, 1)")
    p.add_argument("--tolerance-digits", type=_positive,
                   help="treat --decimal as accurate to 10^-D only")
    p.add_argument("--count", type=_positive, required=True)
    p.add_argument("--max-bits", type=_positive, default=1 << 28)

    p = sub.add_parser("runstats", help="longest runs of a digit stream")
    p.add_argument("file", nargs="?", help="whitespace-separated digits (default stdin)")
    p.add_argument("--symbol", type=_positive, action="append")

    p = sub.add_parser("cylinder", help="cylinder endpoints and Gauss measure")
    p.add_argument("word", help="comma-separated digits, e.g. 1,2,2")

    p = sub.add_parser("lemmas", help="certified constant-word bound reports")
    p.add_argument("--suite", choices=["2", "3", "both"], default="both")
    p.add_argument("--lambda", dest="lambdas", type=_int_list, default=list(range(1, 11)),
                   help="list such as 1-10 or 1,2,5")
    p.add_argument("--k-max", type=int, default=40)
    p.add_argument("--truncation", type=int, default=10**5)
    p.add_argument("--out", help="directory for CSV files (default stdout)")

    p = sub.add_parser("simulate", help="Monte Carlo envelope experiment")
    p.add_argument("config", help="JSON config path or bundled name")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--samples", type=_positive, help="override the configured sample count")

    p = sub.add_parser("oracle", help="exact small-instance distributions")
    osub = p.add_subparsers(dest="oracle", required=True, parser_class=_Parser)
    q = osub.add_parser("runcdf", help="P(L_n < k) for i.i.d. hits of probability p")
    q.add_argument("--p", required=True)
    q.add_argument("--n", type=_positive, required=True)
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--exact", action="store_true", help="rational arithmetic")
    q = osub.add_parser("brute", help="joint law of (L_n, R_n) by enumeration")
    q.add_argument("--alphabet", required=True)
    q.add_argument("--probs", help="comma-separated fractions (default uniform)")
    q.add_argument("--n", type=_positive, required=True)
    q.add_argument("--m-star", type=_positive)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "expand":
        if args.tolerance_digits is not None and args.decimal is None:
            parser.error("--tolerance-digits applies to --decimal only")
        try:
            return cmd_expand(args)
        except ValueError as exc:
            _err(str(exc))
            return EXIT_INPUT
    if args.command == "runstats":
        return cmd_runstats(args)
    if args.command == "cylinder":
        return cmd_cylinder(args)
    if args.command == "lemmas":
        return cmd_lemmas(args, parser)
    if args.command == "simulate":
        return cmd_simulate(args)
    return cmd_oracle(args)


if __name__ == "__main__":
    sys.exit(main())

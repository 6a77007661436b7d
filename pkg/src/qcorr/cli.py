"""Command line entry point: ``qcorr sweep | transition | oracle-check``."""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .errors import QcorrError
from .sweep import (
    SweepConfig, render, run_sweep, scan_transitions, transitions_to_csv,
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2
ORACLE_TOL = 1e-10

# config-file key -> SweepConfig field
_KEYS = {
    "n": ("n", int), "chi": ("chi", float), "jx": ("jx", float),
    "b_min": ("b_min", float), "b_max": ("b_max", float), "b_steps": ("b_steps", int),
    "l": ("separations", str), "separations": ("separations", str),
    "measures": ("measures", str), "format": ("output_format", str),
    "output_format": ("output_format", str), "side_limits": ("side_limits", str),
    "out": ("out", str),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def read_config(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment, dashes in keys read as underscores."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path!r}: {exc}") from None
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{num}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.lower().replace("-", "_")
        if key not in _KEYS:
            raise UsageError(f"{path}:{num}: unknown key {key!r}")
        name, conv = _KEYS[key]
        try:
            out[name] = conv(val)
        except ValueError:
            raise UsageError(f"{path}:{num}: bad value for {key}: {val!r}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="qcorr", description="Pair correlation measures in the cyclic XY chain.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sw = sub.add_parser("sweep", help="measures along a transverse-field grid")
    sw.add_argument("--config", help="flat key=value file; flags override it")
    sw.add_argument("--n", type=int)
    sw.add_argument("--chi", type=float)
    sw.add_argument("--jx", type=float)
    sw.add_argument("--b-min", dest="b_min", type=float)
    sw.add_argument("--b-max", dest="b_max", type=float)
    sw.add_argument("--b-steps", dest="b_steps", type=int)
    sw.add_argument("--L", dest="separations", help='"all" or comma-separated separations')
    sw.add_argument("--measures", help="e.g. C,E,D,I1,I2,Iq(2),IRq(2),gamma_D")
    sw.add_argument("--format", dest="output_format", choices=("csv", "json"))
    sw.add_argument("--side-limits", dest="side_limits", choices=("both", "left", "right"))
    sw.add_argument("--out", help="output file (default stdout)")

    tr = sub.add_parser("transition", help="measurement-transition fields versus anisotropy")
    tr.add_argument("--n", type=int, required=True)
    tr.add_argument("--chi-min", type=float, default=0.05)
    tr.add_argument("--chi-max", type=float, default=1.0)
    tr.add_argument("--chi-steps", type=int, default=60)
    tr.add_argument("--b-min", type=float, default=0.0)
    tr.add_argument("--b-max", type=float, default=1.5)
    tr.add_argument("--b-steps", type=int, default=151)
    tr.add_argument("--L", dest="separations", default="all")
    tr.add_argument("--kinds", default="I2,I1", help="subset of I2,I1")
    tr.add_argument("--out")

    oc = sub.add_parser("oracle-check", help="compare the fermion solver with dense ED")
    oc.add_argument("--n", type=int, default=8)
    return ap


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _sweep(args) -> int:
    values = read_config(args.config) if args.config else {}
    for key in ("n", "chi", "jx", "b_min", "b_max", "b_steps", "separations", "measures",
                "output_format", "side_limits", "out"):
        v = getattr(args, key)
        if v is not None:
            values[key] = v
    out = values.pop("out", None)
    for key in ("n", "chi"):
        if key not in values:
            raise UsageError(f"sweep: --{key} is required (flag or config file)")
    cfg = SweepConfig(**values)
    rows = run_sweep(cfg)
    _emit(render(cfg, rows), out)
    failed = [r for r in rows if r.error is not None]
    for r in failed:
        print(f"qcorr: B={r.B:.12g} L={r.L}: {r.error}", file=sys.stderr)
    return EXIT_NUMERIC if failed else EXIT_OK


def _transition(args) -> int:
    if args.chi_steps < 1 or args.chi_min > args.chi_max:
        raise UsageError("transition: need chi-min <= chi-max and chi-steps >= 1")
    kinds = tuple(k.strip() for k in args.kinds.split(",") if k.strip())
    if not kinds or set(kinds) - {"I2", "I1"}:
        raise UsageError(f"transition: --kinds must be a subset of I2,I1, got {args.kinds!r}")
    chis = (np.array([args.chi_min]) if args.chi_steps == 1
            else np.linspace(args.chi_min, args.chi_max, args.chi_steps))
    cfgs = [SweepConfig(args.n, float(chi), b_min=args.b_min, b_max=args.b_max,
                        b_steps=args.b_steps, separations=args.separations,
                        transition_scan=True) for chi in chis]
    scans = scan_transitions(cfgs, kinds)
    _emit(transitions_to_csv([(c.chi, r) for c, r in zip(cfgs, scans)]), args.out)
    return EXIT_OK


def _oracle_check(args) -> int:
    from .ed import compare_with_solver

    worst = 0.0
    for chi, b, parity, dev in compare_with_solver(args.n):
        status = "ok" if dev < ORACLE_TOL else "FAIL"
        print(f"chi={chi:g} B={b:.6g} parity={parity:+d} max_dev={dev:.3e} {status}")
        worst = max(worst, dev)
    print(f"worst deviation {worst:.3e} (tolerance {ORACLE_TOL:g})")
    return EXIT_OK if worst < ORACLE_TOL and math.isfinite(worst) else EXIT_NUMERIC


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"sweep": _sweep, "transition": _transition, "oracle-check": _oracle_check}
    try:
        return handler[args.command](args)
    except UsageError as exc:
        print(f"qcorr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:  # DomainError from config validation names the field
        print(f"qcorr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QcorrError as exc:
        print(f"qcorr: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

"""Batch front end. Exit codes: 0 ok, 2 bad input, 3 bounds only, 4 internal inconsistency or failed self-test."""

from __future__ import annotations

import argparse
import json
import math
import os
import random
import re
import sys
import time
from typing import Any, Optional, Sequence

from sbl.convolution import convolve, convolve_stalk_oracle
from sbl.dynamics import hamiltonian_from_json
from sbl.exact_linalg import Field, GradedDims
from sbl.gf_engine import DEFAULT_SCHEDULE, GFError, InconsistentComplex, gf_homology_window
from sbl.interval_algebra import SheafOnR, stalk
from sbl.invariants import DomainSpec, InvariantError, InvariantReport, capacity, hh_full, hh_in_total, hh_out_window
from sbl.persistence import to_barcode
from sbl.sampling import probe_points
from sbl.selftest import FIXTURES, report_bytes, run_selftest

EXIT_OK, EXIT_INPUT, EXIT_BOUNDS, EXIT_INCONSISTENT = 0, 2, 3, 4
_NUMBER = re.compile(r"^[+-]?(?:inf|(?:\d+\.?\d*|\.\d+)(?:e[+-]?\d+)?)$")


class UsageError(ValueError):
    pass


def parse_number(text: str) -> float:
    """``3.5``, ``pi``, ``2pi``, ``1.5*pi``, ``-pi``, ``-inf``, ``inf``."""
    t = text.strip().lower()
    scale = 1.0
    if t.endswith("pi"):
        t, scale = t[:-2].rstrip("*"), math.pi
        t = t + "1" if t in ("", "+", "-") else t
    if not _NUMBER.match(t):
        raise UsageError(f"not a number: {text!r}")
    return float(t) * scale


def parse_window(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"window must be 'a,b', got {text!r}")
    a, b = (parse_number(p) for p in parts)
    if not a < b:
        raise UsageError(f"window needs a < b, got {text!r}")
    return a, b


def parse_domain(text: str) -> DomainSpec:
    """``ball:CAP`` or ``ellipse:A11,A12,A22:CAP`` for the sublevel set of a positive form."""
    kind, _, rest = text.partition(":")
    try:
        if kind == "ball":
            return DomainSpec.ball(parse_number(rest))
        if kind == "ellipse":
            coeffs, _, cap = rest.partition(":")
            a11, a12, a22 = (parse_number(x) for x in coeffs.split(","))
            return DomainSpec(((a11, a12), (a12, a22)), parse_number(cap))
    except ValueError as exc:
        raise UsageError(f"bad domain {text!r}: {exc}") from exc
    raise UsageError(f"domain must be ball:CAP or ellipse:A11,A12,A22:CAP, got {text!r}")


def _load_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def _load_sheaf(path: str, field: Field) -> SheafOnR:
    try:
        return SheafOnR.from_json(_load_json(path), field)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _dump(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _emit(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def dims_svg(title: str, dims: Optional[GradedDims], width: int = 360, unit: int = 18) -> str:
    """Bar chart of dimension by degree; an empty chart in bounds mode."""
    items = sorted(dims.items()) if dims is not None else []
    lo = min((d for d, _ in items), default=0)
    hi = max((d for d, _ in items), default=0)
    top = max((n for _, n in items), default=1)
    cols = hi - lo + 1
    step = (width - 40) / cols
    height = 50 + unit * top
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">']
    out.append(f'<text x="10" y="14" font-size="11">{title}</text>')
    for d, n in items:
        x = 20 + (d - lo) * step
        out.append(f'<rect x="{x + 2:.2f}" y="{height - 20 - unit * n}" width="{step - 4:.2f}" height="{unit * n}" fill="#1f77b4"/>')
    for k in range(cols):
        out.append(f'<text x="{20 + (k + 0.5) * step:.2f}" y="{height - 6}" font-size="10" text-anchor="middle">{lo + k}</text>')
    if dims is None:
        out.append(f'<text x="20" y="{height // 2}" font-size="11">bounds only</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- subcommands


def cmd_convolve(args: argparse.Namespace) -> int:
    F, G = _load_sheaf(args.first, args.field), _load_sheaf(args.second, args.field)
    H = convolve(F, G)
    out: dict[str, Any] = {"result": H.to_json(), "provenance": "exact"}
    if args.oracle:
        pts = probe_points(F, G, random.Random(args.seed))
        bad = [str(t) for t in pts if stalk(H, t) != convolve_stalk_oracle(F, G, t)]
        out["oracle"] = {"points": len(pts), "disagreements": bad, "agrees": not bad}
    _emit(_dump(out), args.out)
    return EXIT_INCONSISTENT if args.oracle and not out["oracle"]["agrees"] else EXIT_OK


def cmd_barcode(args: argparse.Namespace) -> int:
    B = to_barcode(_load_sheaf(args.sheaf, args.field))
    _emit(_dump({"barcode": B.to_json(), "provenance": "exact"}), args.out)
    if args.csv:
        _emit(B.to_csv(), args.csv)
    if args.svg:
        _emit(B.to_svg() + "\n", args.svg)
    return EXIT_OK


def _schedule(text: Optional[str]) -> tuple[float, ...]:
    if text is None:
        return DEFAULT_SCHEDULE
    vals = tuple(parse_number(x) for x in text.split(","))
    if len(vals) < 3 or any(not 0 < x < y for x, y in zip(vals, vals[1:])) or vals[0] <= 0:
        raise UsageError("schedule must be at least three increasing positive slopes")
    return vals


def cmd_hh(args: argparse.Namespace) -> int:
    U = parse_domain(args.domain)
    a, b = parse_window(args.window)
    sched = _schedule(args.schedule)
    if args.mode == "full":
        if a != -math.inf:
            raise UsageError("--mode full takes a window -inf,L")
        rep: InvariantReport = hh_full(U, b, sched, args.field)
    elif args.mode == "in":
        rep = hh_in_total(U, a, b, sched, args.field)
    else:
        rep = hh_out_window(U, a, b, sched, args.field)
    _emit(_dump({"domain": U.to_json(), "mode": args.mode, "report": rep.to_json()}), args.out)
    if args.svg:
        _emit(dims_svg(f"{args.mode} window ({args.window}]", rep.dims), args.svg)
    return EXIT_OK if rep.exact else EXIT_BOUNDS


def cmd_capacity(args: argparse.Namespace) -> int:
    if args.k < 1:
        raise UsageError("--k must be a positive integer")
    res = capacity(parse_domain(args.domain), args.k, field=args.field)
    lo, hi = res.bracket
    rows = ["domain,k,value,lower,upper,provenance", f"{args.domain},{args.k},{res.value!r},{lo!r},{hi!r},certified-tolerance"]
    _emit("\n".join(rows) + "\n", args.out)
    return EXIT_OK


def cmd_spectrum(args: argparse.Namespace) -> int:
    U = parse_domain(args.domain)
    vals = U.spectrum(parse_number(args.upto))
    _emit(_dump({"domain": U.to_json(), "upto": args.upto, "values": vals, "provenance": "closed form: multiples of the capacity"}), args.out)
    return EXIT_OK


def cmd_gf(args: argparse.Namespace) -> int:
    try:
        H = hamiltonian_from_json(_load_json(args.hamiltonian))
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"{args.hamiltonian}: {exc}") from exc
    a, b = parse_window(args.window)
    dims = gf_homology_window(H, a, b, backend=args.backend, field=args.field, steps=args.steps, resolution=args.resolution)
    prov = "exact" if args.backend == "combinatorial" else "certified-tolerance"
    out = {"window": [_inf(a), _inf(b)], "backend": args.backend, "dims": dims.to_json(), "provenance": prov}
    _emit(_dump(out), args.out)
    if args.svg:
        _emit(dims_svg(f"generating-function homology ({args.window}]", dims), args.svg)
    return EXIT_OK


def _inf(x: float) -> Any:
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def cmd_selftest(args: argparse.Namespace) -> int:
    only = None
    if args.only:
        try:
            only = [int(x) for x in args.only.split(",")]
        except ValueError as exc:
            raise UsageError(f"--only takes comma-separated criterion numbers: {exc}") from exc

    def progress(v: Any, start: list[float] = [time.perf_counter()]) -> None:  # noqa: B006
        now = time.perf_counter()
        print(f"{v.line()}  [{now - start[0]:.1f} s]", file=sys.stderr, flush=True)
        start[0] = now

    try:
        report = run_selftest(args.seed, only, args.fixture, progress)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    data = report_bytes(report)
    if args.out is None:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        with open(args.out, "wb") as fh:
            fh.write(data)
    return EXIT_OK if report["passed"] else EXIT_INCONSISTENT


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--field", type=_field, default=Field.from_tag("f2"), help="coefficient field: f2 (default), q, or fP")
    common.add_argument("--threads", type=int, default=None, help="worker count; sets SBL_THREADS, affects runtime only")
    common.add_argument("--out", default=None, help="output file (default: stdout)")

    p = argparse.ArgumentParser(prog="sbl", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("convolve", parents=[common], help="convolve two sheaves given as JSON")
    s.add_argument("first")
    s.add_argument("second")
    s.add_argument("--oracle", action="store_true", help="cross-check stalks against the direct-image oracle")
    s.add_argument("--seed", type=int, default=0, help="seed for oracle probe points")
    s.set_defaults(func=cmd_convolve)

    s = sub.add_parser("barcode", parents=[common], help="barcode of a sheaf given as JSON")
    s.add_argument("sheaf")
    s.add_argument("--csv", default=None)
    s.add_argument("--svg", default=None)
    s.set_defaults(func=cmd_barcode)

    s = sub.add_parser("hh", parents=[common], help="action-window invariant of a planar domain")
    s.add_argument("--domain", required=True, help="ball:CAP or ellipse:A11,A12,A22:CAP")
    s.add_argument("--window", required=True, help="a,b; numbers, inf, or multiples of pi")
    s.add_argument("--mode", choices=("in", "out", "full"), default="in")
    s.add_argument("--schedule", default=None, help="comma-separated cofinal slopes")
    s.add_argument("--svg", default=None)
    s.set_defaults(func=cmd_hh)

    s = sub.add_parser("capacity", parents=[common], help="k-th spectral capacity as a CSV row")
    s.add_argument("--domain", required=True)
    s.add_argument("--k", type=int, default=1)
    s.set_defaults(func=cmd_capacity)

    s = sub.add_parser("spectrum", parents=[common], help="action spectrum of the boundary up to a level")
    s.add_argument("--domain", required=True)
    s.add_argument("--upto", required=True)
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("gf", parents=[common], help="generating-function homology of a Hamiltonian given as JSON")
    s.add_argument("hamiltonian")
    s.add_argument("--window", required=True)
    s.add_argument("--backend", choices=("combinatorial", "grid"), default="combinatorial")
    s.add_argument("--resolution", type=int, default=None)
    s.add_argument("--steps", type=int, default=1)
    s.add_argument("--svg", default=None)
    s.set_defaults(func=cmd_gf)

    s = sub.add_parser("selftest", parents=[common], help="run the acceptance checks and emit a JSON report")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--only", default=None, help="comma-separated criterion numbers")
    s.add_argument("--fixture", choices=FIXTURES, default=None, help="run against a deliberately broken component")
    s.set_defaults(func=cmd_selftest)
    return p


def _field(text: str) -> Field:
    try:
        return Field.from_tag(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


_VALUE_FLAGS = ("--window", "--upto", "--schedule")


def _join_negative_values(argv: Sequence[str]) -> list[str]:
    # argparse reads "-inf,0.05" as an option, so bind such values to their flag
    out: list[str] = []
    for tok in argv:
        if out and out[-1] in _VALUE_FLAGS and tok.startswith("-"):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(_join_negative_values(sys.argv[1:] if argv is None else argv))
    if args.threads is not None:
        os.environ["SBL_THREADS"] = str(max(1, args.threads))
    try:
        return args.func(args)
    except (UsageError, InvariantError) as exc:
        print(f"sbl: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InconsistentComplex as exc:
        print(f"sbl: internal inconsistency: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except GFError as exc:
        print(f"sbl: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

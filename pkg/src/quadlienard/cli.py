"""Command-line entry point: ``quadlienard <subcommand> [flags]``.

Exit codes: 0 success, 2 parse or config error, 3 precondition violation,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from typing import List, Optional

from . import __version__
from .analysis import (
    LienardFamily,
    abcd_criterion,
    conditions21_check,
    find_equilibria,
    theorem1_certify,
    theorem5_certify,
)
from .errors import ParseError, PreconditionError, QuadLienardError
from .io import dumps, lienard_to_dict, load_system
from .numerics import RETURN_OPTIONS, CycleSearchOptions, cycle_orbit, find_cycles
from .plotting import run_plot
from .reduction import QuadraticSystem, eliminate_c1, to_lienard
from .sampling import RunConfig, run_sample
from .transversal import build_transversal

WEAK_FOCUS_TOL = 1e-9


def detuned(s: QuadraticSystem, eps: Optional[float]) -> QuadraticSystem:
    """The one-parameter family used by every subcommand: alpha1 -> alpha1 - eps."""
    return s if not eps else replace(s, alpha1=s.alpha1 - eps)


def reduce_system(s: QuadraticSystem):
    s2, rec = eliminate_c1(s)
    return to_lienard(s2, rec)


def _parse_box(text: str):
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise ParseError(f"--box expects two comma-separated numbers, got {text!r}") from None
    if not lo < hi:
        raise ParseError(f"--box needs x0 < x1, got {text!r}")
    return lo, hi


def _load(args):
    if not args.input:
        raise ParseError("--input PATH is required")
    s, eps = load_system(args.input)
    if args.epsilon is not None:
        eps = args.epsilon
    return s, eps


def _emit(args, name: str, payload: dict) -> None:
    text = dumps(payload) + "\n"
    if args.output:
        os.makedirs(args.output, exist_ok=True)
        path = os.path.join(args.output, f"{name}.json")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(path)
    else:
        sys.stdout.write(text)


def cmd_reduce(args) -> int:
    s, eps = _load(args)
    s_eps = detuned(s, eps)
    out = {"artifact": "reduction", "input": s.to_dict(), "epsilon": eps}
    out.update(lienard_to_dict(reduce_system(s_eps)))
    _emit(args, "reduce", out)
    return 0


def _weak_foci(lf) -> List[float]:
    out = []
    for e in find_equilibria(lf):
        x0 = float(e.location[0])
        if abs(lf.f.scalar(x0)) <= WEAK_FOCUS_TOL and e.jacobian[1, 0] < 0:
            out.append(x0)
    return out


def cmd_certify(args) -> int:
    s, eps = _load(args)
    s_eps = detuned(s, eps)
    certs, notes = [], []
    if eps:
        family = LienardFamily(lambda e: reduce_system(detuned(s, e)), eps)
        for x0 in _weak_foci(family.build(0.0)):
            try:
                c = theorem1_certify(family, x0)
            except QuadLienardError as exc:
                notes.append(f"weak focus at x={x0}: {exc}")
                continue
            if c is not None:
                certs.append(c.to_dict())
            else:
                notes.append(f"weak focus at x={x0}: sign conditions not met")
    else:
        notes.append("no --epsilon: small-cycle certificate skipped")
    focus = None
    if s_eps.b1 == 1.0 and s_eps.beta1 == 1.0 and s_eps.c1 == 0.0:
        crit, cert = abcd_criterion(s_eps)
        focus = crit.to_dict()
        if cert is not None:
            certs.append(cert.to_dict())
    c21 = conditions21_check(s_eps)
    cert5 = theorem5_certify(s_eps)
    if cert5 is not None:
        certs.append(cert5.to_dict())
    elif not c21:
        notes.append("attractor certificate: violated " + "; ".join(c21.violated()))
    eqs = find_equilibria(s_eps)
    _emit(args, "certify", {
        "artifact": "certificates", "system": s_eps.to_dict(), "epsilon": eps,
        "equilibria": [e.to_dict() for e in eqs], "focus_criterion": focus,
        "conditions21": c21.to_dict(), "certificates": certs, "notes": notes,
    })
    return 0


def _default_boxes(lf):
    """From each non-saddle equilibrium rightwards to the next equilibrium or pole."""
    eqs = find_equilibria(lf)
    if not eqs:
        raise PreconditionError("no equilibria: pass --box x0,x1")
    stops = sorted([e.location[0] for e in eqs] + list(lf.poles))
    boxes = []
    for e in eqs:
        if e.kind in ("saddle", "degenerate"):
            continue
        x = e.location[0]
        right = [v for v in stops if v > x]
        boxes.append((x, right[0] if right else x + 10.0 * (1.0 + abs(x))))
    return boxes


def cmd_cycles(args) -> int:
    s, eps = _load(args)
    s_eps = detuned(s, eps)
    lf = reduce_system(s_eps)
    opts = CycleSearchOptions() if args.box else CycleSearchOptions(spacing="geometric")
    if args.tol is not None:
        opts = replace(opts, xtol=args.tol, integration=replace(RETURN_OPTIONS, rtol=args.tol, atol=args.tol * 1e-2))
    boxes = [_parse_box(args.box)] if args.box else _default_boxes(lf)
    cycles = sorted((c for b in boxes for c in find_cycles(lf, b, opts)), key=lambda c: c.section_x)
    items = []
    for c in cycles:
        d = c.to_dict()
        d["orbit"] = cycle_orbit(lf, c).tolist()
        items.append(d)
    _emit(args, "cycles", {"artifact": "cycles", "chart": "lienard", "system": s_eps.to_dict(),
                           "epsilon": eps, "boxes": [list(b) for b in boxes], "cycles": items})
    return 0


def cmd_transversal(args) -> int:
    s, eps = _load(args)
    s_eps = detuned(s, eps)
    curve = build_transversal(reduce_system(s_eps))
    _emit(args, "transversal", {
        "artifact": "transversal", "chart": "lienard", "system": s_eps.to_dict(), "epsilon": eps,
        "max_flux": curve.max_flux(), "curve": curve.to_dict(),
    })
    return 0


def cmd_sample(args) -> int:
    kw = {"region": args.region, "n": args.n, "seed": args.seed, "workers": args.workers}
    if args.tol is not None:
        kw.update(rtol=args.tol, atol=args.tol * 1e-2)
    try:
        cfg = RunConfig(**kw)
    except ValueError as exc:
        raise ParseError(str(exc)) from None
    rep = run_sample(cfg).to_dict()
    rep["artifact"] = "sample"
    _emit(args, "sample", rep)
    return 0


def cmd_plot(args) -> int:
    if not args.input:
        raise ParseError("--input PATH is required")
    for path in run_plot(args.input, style=args.style, output_dir=args.output or "."):
        print(path)
    return 0


COMMANDS = {
    "reduce": (cmd_reduce, "reduce a quadratic system to Lienard form"),
    "certify": (cmd_certify, "run the cycle-existence certificates"),
    "cycles": (cmd_cycles, "search for limit cycles on the section y = 0"),
    "transversal": (cmd_transversal, "build the closed transversal curve"),
    "sample": (cmd_sample, "Monte-Carlo sampling of coefficient boxes"),
    "plot": (cmd_plot, "SVG phase portrait and CSV from a JSON artifact"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quadlienard", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_fn, help_) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--input", metavar="PATH")
        sp.add_argument("--output", metavar="DIR")
        if name in ("reduce", "certify", "cycles", "transversal"):
            sp.add_argument("--epsilon", type=float, help="detuning: alpha1 -> alpha1 - eps")
        if name == "cycles":
            sp.add_argument("--box", metavar="x0,x1")
        if name in ("cycles", "sample"):
            sp.add_argument("--tol", type=float)
        if name == "sample":
            sp.add_argument("--n", type=int, default=200)
            sp.add_argument("--seed", type=int, default=0)
            sp.add_argument("--region", choices=("uniform", "theorem5"), default="theorem5")
            sp.add_argument("--workers", type=int, default=1)
        if name == "plot":
            sp.add_argument("--style", choices=("linear", "asinh"), default="linear")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "tol", None) is not None and not args.tol > 0:
        print("error: --tol must be positive", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command][0](args)
    except QuadLienardError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())

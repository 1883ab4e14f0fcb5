"""Phase portraits as hand-written SVG 1.1 plus a CSV of every plotted series."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .analysis import find_equilibria
from .errors import NonIsolatedEquilibrium, ParseError, UnknownArtifact
from .reduction import LienardForm, QuadraticSystem, eliminate_c1, to_lienard

__all__ = ["Series", "Portrait", "nullclines", "build_portrait", "render_svg", "render_csv", "run_plot",
           "ARTIFACT_KINDS"]

ARTIFACT_KINDS = ("trajectory", "cycles", "transversal")
WIDTH, HEIGHT, MARGIN = 800, 600, 50

_STYLE = {
    "nullcline_x": 'stroke="#1f77b4" stroke-width="1" fill="none"',
    "nullcline_y": 'stroke="#ff7f0e" stroke-width="1" fill="none"',
    "cycle": 'stroke="#d62728" stroke-width="2" fill="none"',
    "transversal": 'stroke="#2ca02c" stroke-width="1.5" fill="none"',
    "trajectory": 'stroke="#7f7f7f" stroke-width="1" fill="none"',
}


@dataclass
class Series:
    name: str
    kind: str  # nullcline_x | nullcline_y | cycle | transversal | trajectory
    xs: np.ndarray
    ys: np.ndarray


@dataclass
class Portrait:
    title: str
    series: List[Series] = field(default_factory=list)
    equilibria: List[Tuple[float, float, str]] = field(default_factory=list)  # x, y, classification
    pole: Optional[float] = None
    view: Tuple[float, float, float, float] = (-2.0, 2.0, -2.0, 2.0)
    style: str = "linear"  # or asinh: axes compressed by asinh(v / scale)
    scale: float = 1.0


def _split(xs: np.ndarray, ys: np.ndarray):
    """Break a sampled curve at NaNs into finite runs."""
    ok = np.isfinite(xs) & np.isfinite(ys)
    runs, start = [], None
    for i, good in enumerate(ok):
        if good and start is None:
            start = i
        if (not good or i == len(ok) - 1) and start is not None:
            stop = i + 1 if good else i
            if stop - start >= 2:
                runs.append((xs[start:stop], ys[start:stop]))
            start = None
    return runs


def nullclines(field_obj, view, n: int = 801, scale: Optional[float] = None) -> List[Series]:
    """Sampled nullclines; with scale set the grid is uniform in asinh(x / scale)."""
    x0, x1, y0, y1 = view
    if scale is None:
        xs = np.linspace(x0, x1, n)
    else:
        xs = scale * np.sinh(np.linspace(np.arcsinh(x0 / scale), np.arcsinh(x1 / scale), 4 * n))
    out: List[Series] = []
    with np.errstate(all="ignore"):
        if isinstance(field_obj, LienardForm):
            curves = [("x", xs, np.zeros_like(xs))]
            fv, gv = field_obj.f(xs), field_obj.g(xs)
            curves.append(("y", xs, np.where(fv != 0, -gv / fv, np.nan)))
        else:
            s = field_obj
            curves = []
            # x' = 0 and y' = 0, each quadratic in y
            for tag, (c, b1, be, a, al) in (("x", (s.c1, s.b1, s.beta1, s.a1, s.alpha1)),
                                            ("y", (s.c2, s.b2, s.beta2, s.a2, s.alpha2))):
                B = b1 * xs + be
                C = a * xs ** 2 + al * xs
                if c == 0.0:
                    curves.append((tag, xs, np.where(B != 0, -C / B, np.nan)))
                else:
                    disc = B * B - 4 * c * C
                    r = np.sqrt(np.where(disc >= 0, disc, np.nan))
                    curves.append((tag, xs, (-B + r) / (2 * c)))
                    curves.append((tag, xs, (-B - r) / (2 * c)))
    pole = getattr(field_obj, "pole", None)
    count = {"x": 0, "y": 0}
    for tag, cx, cy in curves:
        cy = np.where((cy >= y0) & (cy <= y1), cy, np.nan)
        if pole is not None:
            cy = np.where(np.abs(cx - pole) < 1e-9 * (1 + abs(pole)), np.nan, cy)
            # do not join the two sides of the pole line
            side = np.sign(cx - pole)
            jump = np.concatenate([[False], side[1:] != side[:-1]])
            cy = np.where(jump, np.nan, cy)
        for rx, ry in _split(cx, cy):
            out.append(Series(f"nullcline_{tag}{count[tag]}", f"nullcline_{tag}", rx, ry))
            count[tag] += 1
    return out


def _tx(p: Portrait, v, axis: int):
    lo, hi = (p.view[0], p.view[1]) if axis == 0 else (p.view[2], p.view[3])
    if p.style == "asinh":
        f = lambda t: np.arcsinh(np.asarray(t, dtype=float) / p.scale)  # noqa: E731
        v, lo, hi = f(v), float(f(lo)), float(f(hi))
    v = np.asarray(v, dtype=float)
    if axis == 0:
        return MARGIN + (v - lo) / (hi - lo) * (WIDTH - 2 * MARGIN)
    return HEIGHT - MARGIN - (v - lo) / (hi - lo) * (HEIGHT - 2 * MARGIN)


def _fmt(v: float) -> str:
    return format(float(v), ".2f")


def render_svg(p: Portrait) -> str:
    lines = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f"<title>{p.title}</title>",
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" height="{HEIGHT - 2 * MARGIN}" '
        'fill="none" stroke="black" stroke-width="0.5"/>',
    ]
    x0, x1, y0, y1 = p.view
    if y0 < 0 < y1:
        yy = _fmt(_tx(p, 0.0, 1))
        lines.append(f'<line x1="{MARGIN}" y1="{yy}" x2="{WIDTH - MARGIN}" y2="{yy}" stroke="#cccccc" stroke-width="0.5"/>')
    if p.pole is not None and x0 < p.pole < x1:
        px = _fmt(_tx(p, p.pole, 0))
        lines.append(f'<line id="pole" x1="{px}" y1="{MARGIN}" x2="{px}" y2="{HEIGHT - MARGIN}" '
                     'stroke="black" stroke-width="1" stroke-dasharray="6,4"/>')
    for s in p.series:
        xs = np.clip(s.xs, x0 - (x1 - x0), x1 + (x1 - x0))
        ys = np.clip(s.ys, y0 - (y1 - y0), y1 + (y1 - y0))
        px, py = _tx(p, xs, 0), _tx(p, ys, 1)
        pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(px, py))
        lines.append(f'<polyline id="{s.name}" class="{s.kind}" {_STYLE[s.kind]} points="{pts}"/>')
    for i, (ex, ey, cls) in enumerate(p.equilibria):
        if not (x0 <= ex <= x1 and y0 <= ey <= y1):
            continue
        cx, cy = _fmt(_tx(p, ex, 0)), _fmt(_tx(p, ey, 1))
        fill = "black" if cls.startswith("stable") else "white"
        lines.append(f'<circle id="equilibrium{i}" class="equilibrium" data-type="{cls}" cx="{cx}" cy="{cy}" '
                     f'r="5" fill="{fill}" stroke="black" stroke-width="1.5"/>')
    lines.append(f'<text x="{MARGIN}" y="{MARGIN - 15}" font-family="sans-serif" font-size="14">{p.title}</text>')
    lines.append(f'<text x="{MARGIN}" y="{HEIGHT - 15}" font-family="sans-serif" font-size="11">'
                 f'x in [{x0:.4g}, {x1:.4g}], y in [{y0:.4g}, {y1:.4g}], axes {p.style}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def render_csv(p: Portrait) -> str:
    cols = []
    header = []
    for s in p.series:
        header += [f"{s.name}_x", f"{s.name}_y"]
        cols += [s.xs, s.ys]
    if p.equilibria:
        header += ["equilibria_x", "equilibria_y"]
        cols += [np.array([e[0] for e in p.equilibria]), np.array([e[1] for e in p.equilibria])]
    n = max((len(c) for c in cols), default=0)
    out = [",".join(header)]
    for i in range(n):
        out.append(",".join(format(float(c[i]), ".17g") if i < len(c) else "" for c in cols))
    return "\n".join(out) + "\n"


def _auto_view(p: Portrait, margin: float = 0.1):
    xs, ys = [], []
    for s in p.series:
        if s.kind in ("cycle", "transversal", "trajectory"):
            xs.append(s.xs)
            ys.append(s.ys)
    for e in p.equilibria:
        xs.append(np.array([e[0]]))
        ys.append(np.array([e[1]]))
    if not xs:
        return (-2.0, 2.0, -2.0, 2.0)
    X, Y = np.concatenate(xs), np.concatenate(ys)
    x0, x1, y0, y1 = X.min(), X.max(), Y.min(), Y.max()
    w, h = max(x1 - x0, 1.0), max(y1 - y0, 1.0)
    return (float(x0 - margin * w), float(x1 + margin * w), float(y0 - margin * h), float(y1 + margin * h))


def build_portrait(field_obj, title: str, curves: Sequence[Tuple[str, str, np.ndarray]] = (),
                   style: str = "linear", view=None) -> Portrait:
    """curves: (name, kind, Nx2 array) triples, drawn over nullclines and equilibria."""
    p = Portrait(title=title, pole=getattr(field_obj, "pole", None), style=style)
    try:
        eqs = find_equilibria(field_obj)
    except NonIsolatedEquilibrium:
        eqs = []
    p.equilibria = [(float(e.location[0]), float(e.location[1]), e.classification) for e in eqs]
    for name, kind, arr in curves:
        arr = np.asarray(arr, dtype=float)
        p.series.append(Series(name, kind, arr[:, 0], arr[:, 1]))
    p.view = tuple(map(float, view)) if view is not None else _auto_view(p)
    if style == "asinh":
        p.scale = 1.0
    p.series = nullclines(field_obj, p.view, scale=p.scale if style == "asinh" else None) + p.series
    return p


def _field_from_artifact(data: dict):
    s = QuadraticSystem.from_dict(data["system"])
    if data.get("chart", "lienard") == "original":
        return s
    s2, rec = eliminate_c1(s)
    return to_lienard(s2, rec)


def run_plot(artifact_path: str, style: str = "linear", output_dir: str = ".") -> Tuple[str, str]:
    """Read a JSON artifact and write portrait.svg and portrait.csv into output_dir."""
    import os

    try:
        with open(artifact_path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{artifact_path}: {exc}") from None
    kind = data.get("artifact") if isinstance(data, dict) else None
    if kind not in ARTIFACT_KINDS:
        raise UnknownArtifact(f"{artifact_path}: artifact must be one of {', '.join(ARTIFACT_KINDS)}, got {kind!r}")
    fobj = _field_from_artifact(data)
    curves = []
    if kind == "cycles":
        for i, c in enumerate(data.get("cycles", [])):
            if c.get("orbit"):
                curves.append((f"cycle{i}", "cycle", np.asarray(c["orbit"])))
        title = f"cycles ({len(curves)})"
    elif kind == "transversal":
        for seg in data["curve"]["segments"]:
            curves.append((seg["name"], "transversal", np.column_stack([seg["x"], seg["y"]])))
        title = "transversal curve"
    else:
        curves.append(("trajectory", "trajectory", np.asarray(data["states"])[:, :2]))
        title = "trajectory"
    p = build_portrait(fobj, title, curves, style=style)
    svg, csv = render_svg(p), render_csv(p)
    os.makedirs(output_dir, exist_ok=True)
    svg_path = os.path.join(output_dir, "portrait.svg")
    csv_path = os.path.join(output_dir, "portrait.csv")
    with open(svg_path, "w", encoding="utf-8") as fh:
        fh.write(svg)
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(csv)
    return svg_path, csv_path

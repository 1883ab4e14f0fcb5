"""Piecewise level-set closed curve crossed inward by x' = y, y' = -f y - g.

The curve is assembled from sublevel-set boundaries of

    V1 = y^2 + 2 G(x)
    V2 = (y + I1(x))^2 + 2 G(x)          I1(x) = int_{nu1}^x f
    V3 = (y + I2(x))^2 + 2 G(x)          I2(x) = int_{nu2}^x f
    V4 = V2 - eps (x - nu1),   V7 = V2 + eps (x - nu1)
    V5 = V3 - eps (x - nu2),   V6 = V3 + eps (x - nu2)

with G(x) = int_{x0}^x g.  The arcs meet the axis at mu1 < nu1 and
mu2 > nu2 chosen on a common level G(mu1) = G(mu2) = level, so that
int_{mu1}^{mu2} g = 0.  The tilted pieces over the band [nu1, nu2] leave
a vertical gap at x0 on each side, closed by two short vertical segments
that the flow also crosses inward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from scipy.optimize import brentq

from .algebra import WeightedFn, cumulative_integral, definite_integral, real_roots
from .errors import ConditionsViolated, NoBalancedPair, ZeroPolynomial
from .reduction import LienardForm

__all__ = ["Segment", "TransversalCurve", "build_transversal", "default_anchors", "segment_flux"]


@dataclass
class Segment:
    name: str  # omega1..omega8, connector_top, connector_bottom
    function: str  # V1..V7, or "x" for the vertical connectors
    xs: np.ndarray
    ys: np.ndarray
    vdot: np.ndarray  # closed-form derivative of V along the flow (normal flux on connectors)
    outward_flux: np.ndarray  # grad(V) . field from the gradient components
    flux_scale: np.ndarray  # magnitude of the summands in outward_flux, for rounding bounds

    @property
    def start(self):
        return float(self.xs[0]), float(self.ys[0])

    @property
    def end(self):
        return float(self.xs[-1]), float(self.ys[-1])


@dataclass
class TransversalCurve:
    a: Optional[float]
    nu1: float
    nu2: float
    x0: float
    mu1: float
    mu2: float
    epsilon: float
    level: float
    y: Dict[str, float]
    segments: List[Segment]  # the eight level-set arcs, in order around the curve
    connectors: List[Segment]
    balance: float  # int_{mu1}^{mu2} g
    band_floor: float
    band_threshold: float
    nu_integral: float  # int_{nu2}^{nu1} f (reported, not required to be <= 0)
    attempts: List[dict] = field(default_factory=list)
    # False when the band-floor rule was out of reach and the curve rests on the sampled flux only
    floor_rule_met: bool = True

    def pieces(self) -> List[Segment]:
        """All ten pieces in traversal order (clockwise, starting at (mu1, 0))."""
        s, c = self.segments, self.connectors
        return [s[0], s[1], c[0], s[2], s[3], s[4], s[5], c[1], s[6], s[7]]

    def closed_polyline(self) -> np.ndarray:
        pts = [np.column_stack([p.xs, p.ys]) for p in self.pieces()]
        return np.vstack(pts)

    def _mask(self, p: Segment, min_abs_y: float) -> np.ndarray:
        mask = np.abs(p.ys) > min_abs_y
        if p.name.startswith("omega"):
            mask &= (p.xs != self.nu1) & (p.xs != self.nu2)
        return mask

    def max_flux(self, min_abs_y: float = 0.0) -> float:
        """Largest V-dot over all sampled boundary points with |y| > min_abs_y."""
        worst = -math.inf
        for p in self.pieces():
            mask = self._mask(p, min_abs_y)
            if mask.any():
                worst = max(worst, float(np.max(p.vdot[mask])))
        return worst

    def flux_mismatch(self, min_abs_y: float = 0.0) -> float:
        """max |grad(V).field - V-dot| / (1 + summand magnitude) over the sampled points."""
        worst = 0.0
        for p in self.pieces():
            mask = self._mask(p, min_abs_y)
            if mask.any():
                rel = np.abs(p.outward_flux - p.vdot) / (1.0 + p.flux_scale)
                worst = max(worst, float(np.max(rel[mask])))
        return worst

    def junction_gaps(self) -> float:
        """Largest distance between consecutive piece endpoints (closing the loop)."""
        ps = self.pieces()
        gaps = [math.dist(ps[i].end, ps[(i + 1) % len(ps)].start) for i in range(len(ps))]
        return max(gaps)

    def to_dict(self) -> dict:
        return {
            "a": self.a, "nu1": self.nu1, "nu2": self.nu2, "x0": self.x0,
            "mu1": self.mu1, "mu2": self.mu2, "epsilon": self.epsilon, "level": self.level,
            "y": dict(self.y), "balance": self.balance, "floor_rule_met": self.floor_rule_met,
            "segments": [{"name": p.name, "function": p.function, "x": p.xs.tolist(), "y": p.ys.tolist()}
                         for p in self.pieces()],
        }


# ---------------------------------------------------------------------------
# integrals that stay accurate near the pole and far out


def _breaks(lo: float, hi: float, a: Optional[float]) -> List[float]:
    """Breakpoints splitting [lo, hi] into pieces of bounded distance ratio to a and to 0."""
    lo_, hi_ = min(lo, hi), max(lo, hi)
    pts = {lo_, hi_}
    if a is not None:
        d_lo, d_hi = lo_ - a, hi_ - a
        if d_lo > 0:
            d = d_lo * 2.0
            while d < d_hi:
                pts.add(a + d)
                d *= 2.0
    m = 1.0
    while m < hi_:
        if m > lo_:
            pts.add(m)
        m *= 2.0
    m = -1.0
    while m > lo_:
        if m < hi_ and (a is None or m > a):
            pts.add(m)
        m *= 2.0
    return sorted(pts)


def _integral(w: WeightedFn, lo: float, hi: float, a: Optional[float]) -> float:
    if lo == hi:
        return 0.0
    b = _breaks(lo, hi, a)
    total = math.fsum(definite_integral(w, b[i], b[i + 1]) for i in range(len(b) - 1))
    return total if hi > lo else -total


def _arc_grid(lo: float, hi: float, a: Optional[float], n: int, dense_end: str) -> np.ndarray:
    """n points on [lo, hi], clustered towards the pole side or spread log-wise far out."""
    if dense_end == "pole" and a is not None:
        d = np.geomspace(lo - a, hi - a, n)
        xs = a + d
    elif dense_end == "far" and hi > 0 and lo > 0 and hi / lo > 10:
        xs = np.geomspace(lo, hi, n)
    elif dense_end == "far_left" and a is None and lo < 0 and hi < 0 and lo / hi > 10:
        xs = -np.geomspace(-hi, -lo, n)[::-1]
    else:
        xs = np.linspace(lo, hi, n)
    xs[0], xs[-1] = lo, hi
    return xs


# ---------------------------------------------------------------------------


def _sign_change_roots(w: WeightedFn, lo: float, hi: float) -> List[float]:
    try:
        roots = real_roots(w.core.numerator.trimmed(), with_multiplicity=True)
    except ZeroPolynomial:
        return []
    out = []
    for r, mult in roots:
        if lo < r < hi and mult % 2 == 1:
            out.append(r)
    return out


def default_anchors(lf: LienardForm, x0: Optional[float] = None):
    """(nu1, nu2, x0): outermost sign changes of f, widened to contain x0 and every zero of g."""
    a = lf.pole
    lo = a if a is not None else -math.inf
    gz = _sign_change_roots(lf.g, lo, math.inf)
    if x0 is None:
        if not gz:
            raise ConditionsViolated("g has no zero to the right of the pole")
        x0 = gz[len(gz) // 2]
    fz = _sign_change_roots(lf.f, lo, math.inf)
    # outermost sign changes: f must keep one sign on (a, nu1) and on (nu2, inf)
    nu1 = min(fz[0], x0) if fz else x0
    nu2 = max(fz[-1], x0) if fz else x0
    if gz:
        zmin, zmax = min(gz), max(gz)
        if zmin <= nu1:
            nu1 = zmin - 0.05 * ((zmin - a) if a is not None else 1.0 + abs(zmin))
        if zmax >= nu2:
            nu2 = zmax + 0.05 * (1.0 + abs(zmax))
    return nu1, nu2, x0


def _check_hypotheses(lf: LienardForm, a, nu1: float, nu2: float, x0: float) -> None:
    if a is not None and not a < nu1:
        raise ConditionsViolated(f"need a < nu1, got a={a}, nu1={nu1}")
    if not nu1 <= x0 <= nu2:
        raise ConditionsViolated(f"need nu1 <= x0 <= nu2, got {nu1}, {x0}, {nu2}")
    lo = a if a is not None else -math.inf
    # f > 0 on (a, nu1) and (nu2, inf): no sign change there and a positive sample
    for side, (l, h) in (("(a, nu1)", (lo, nu1)), ("(nu2, inf)", (nu2, math.inf))):
        if _sign_change_roots(lf.f, l, h):
            raise ConditionsViolated(f"f changes sign on {side}")
        probe = _probe_points(l, h)
        vals = [lf.f.scalar(p) for p in probe]
        if not all(v > 0 for v in vals):
            raise ConditionsViolated(f"f > 0 fails on {side}")
    # g < 0 left of the band, g > 0 right of it
    for side, (l, h), sign in (("(a, nu1]", (lo, nu1), -1), ("[nu2, inf)", (nu2, math.inf), 1)):
        if _sign_change_roots(lf.g, l, h) or any(sign * lf.g.scalar(p) <= 0 for p in _probe_points(l, h)):
            raise ConditionsViolated(f"g must have sign {'+' if sign > 0 else '-'} on {side}")
    if sign_at(lf.g, nu1) >= 0 or sign_at(lf.g, nu2) <= 0:
        raise ConditionsViolated("g must be negative at nu1 and positive at nu2")


def sign_at(w: WeightedFn, x: float) -> float:
    return math.copysign(1.0, w.scalar(x)) if w.scalar(x) != 0.0 else 0.0


def _probe_points(l: float, h: float) -> List[float]:
    if math.isinf(l) and math.isinf(h):
        return [-10.0, 0.0, 10.0]
    if math.isinf(l):
        return [h - 1e3, h - 10.0, h - 0.1]
    if math.isinf(h):
        return [l + 0.1, l + 10.0, l + 1e3]
    return list(np.linspace(l, h, 9)[1:-1])


_TILT = {"V2": 0.0, "V3": 0.0, "V4": -1.0, "V5": -1.0, "V6": 1.0, "V7": 1.0}


def segment_flux(V: str, ys, I, g_vals, f_vals, eps: float):
    """(V-dot closed form, grad(V) . (y, -f y - g), summand magnitude) pointwise."""
    ydot = -f_vals * ys - g_vals
    if V == "V1":
        vx, vy = 2 * g_vals, 2 * ys
        vdot = -2 * f_vals * ys ** 2
    else:
        tilt = _TILT[V] * eps
        vx = 2 * (ys + I) * f_vals + 2 * g_vals + tilt
        vy = 2 * (ys + I)
        vdot = -2 * g_vals * I + tilt * ys
    grad = vx * ys + vy * ydot
    scale = np.abs(vx * ys) + np.abs(vy * ydot)
    return vdot, grad, scale


def build_transversal(lf: LienardForm, nu1: Optional[float] = None, nu2: Optional[float] = None,
                      x0: Optional[float] = None, eps0: float = 1e-2, n_points: int = 2000,
                      max_halvings: int = 20, max_raises: int = 200) -> TransversalCurve:
    """Construct the inward-transversal closed curve (see module docstring)."""
    a = lf.pole
    if nu1 is None or nu2 is None or x0 is None:
        d1, d2, dx0 = default_anchors(lf, x0)
        nu1 = d1 if nu1 is None else nu1
        nu2 = d2 if nu2 is None else nu2
        x0 = dx0 if x0 is None else x0
    _check_hypotheses(lf, a, nu1, nu2, x0)
    f, g = lf.f, lf.g

    G_nu1 = _integral(g, x0, nu1, a)
    G_nu2 = _integral(g, x0, nu2, a)
    nu_integral = _integral(f, nu2, nu1, a)

    # band data on [nu1, nu2]
    # each half of the band carries n_points of its own
    band = np.unique(np.concatenate([np.linspace(nu1, x0, n_points), np.linspace(x0, nu2, n_points)]))
    f_band, g_band = f(band), g(band)
    I1_band = cumulative_integral(f, band)
    I2_band = I1_band - I1_band[-1]
    G_band = cumulative_integral(g, band)
    G_band = G_band - np.interp(x0, band, G_band)
    G_band += G_nu1 - G_band[0]  # anchor on the quadrature value
    gmax = max(float(np.max(np.abs(2 * g_band * I1_band))), float(np.max(np.abs(2 * g_band * I2_band))))

    def G_left(x):  # G on (a, nu1]
        return G_nu1 + _integral(g, nu1, x, a)

    def G_right(x):
        return G_nu2 + _integral(g, nu2, x, a)

    def solve_mu1(level):
        # G decreases on (a, nu1]: G(mu1) = level, searched in log distance to a
        if a is not None:
            span = nu1 - a
            s_hi = 0.0
            s_lo = -1.0
            s_min = math.log(1e-13 * (1.0 + abs(a)) / span)
            while G_left(a + span * math.exp(s_lo)) < level:
                if s_lo <= s_min:
                    raise NoBalancedPair("G does not reach the level near the pole")
                s_lo = max(s_lo - 2.0, s_min)
            s = brentq(lambda t: G_left(a + span * math.exp(t)) - level, s_lo, s_hi, xtol=1e-15, rtol=1e-15)
            return a + span * math.exp(s)
        step = 1.0
        while G_left(nu1 - step) < level:
            step *= 2
            if step > 1e15:
                raise NoBalancedPair("G does not reach the level on the left")
        return brentq(lambda x: G_left(x) - level, nu1 - step, nu1, xtol=1e-15, rtol=1e-15)

    def solve_mu2(level):
        step = 1.0
        while G_right(nu2 + step) < level:
            step *= 2
            if step > 1e15:
                raise NoBalancedPair("G does not reach the level on the right")
        return brentq(lambda x: G_right(x) - level, nu2 + step / 2 if step > 1 else nu2, nu2 + step,
                      xtol=1e-15, rtol=1e-15)

    attempts: List[dict] = []
    fallback = None  # first curve passing the sampled checks without the floor rule
    eps = eps0
    level = 1.05 * max(G_nu1, G_nu2, 0.0) + 1.0
    exhausted = False
    for _halving in range(max_halvings + 1):
        for _raise in range(max_raises):
            try:
                mu1 = solve_mu1(level)
                # near the pole one ulp of mu1 moves G a lot; match the level G reaches there
                level = G_left(mu1)
                mu2 = solve_mu2(level)
            except NoBalancedPair:
                if fallback is None and not attempts:
                    raise
                exhausted = True
                break
            cand = _assemble(lf, a, nu1, nu2, x0, mu1, mu2, eps, level, band, f_band, g_band,
                             I1_band, I2_band, G_band, n_points)
            floor_ok = cand["floor"] > gmax / eps
            order_ok = cand["y"]["y5"] < cand["y"]["y6"] and cand["y"]["y7"] > cand["y"]["y8"]
            flux_ok = cand["curve"] is not None and cand["curve"].max_flux(_yfloor(cand["curve"])) < 0
            attempts.append({"epsilon": eps, "level": level, "mu1": mu1, "mu2": mu2,
                             "floor": cand["floor"], "threshold": gmax / eps,
                             "order_ok": order_ok, "flux_ok": flux_ok})
            if order_ok and flux_ok:
                curve = cand["curve"]
                curve.band_threshold = gmax / eps
                curve.nu_integral = nu_integral
                curve.balance = _integral(g, mu1, mu2, a)
                curve.attempts = attempts
                if floor_ok:
                    return curve
                if fallback is None:
                    curve.floor_rule_met = False
                    fallback = curve
            if floor_ok and not order_ok:
                break  # raising further only helps slowly; tilt less
            level *= 4.0
            if a is not None and (mu1 - a) < 1e-13 * (1 + abs(a)):
                exhausted = True
                break
            if mu2 > 1e13:
                exhausted = True
                break
        if exhausted and fallback is not None:
            return fallback
        eps /= 2.0
    if fallback is not None:
        return fallback
    raise NoBalancedPair(f"no transversal curve after {len(attempts)} attempts")


def _yfloor(curve: TransversalCurve) -> float:
    return 1e-9 * (1.0 + max(abs(v) for v in curve.y.values()))


def _assemble(lf, a, nu1, nu2, x0, mu1, mu2, eps, level, band, f_band, g_band, I1_band, I2_band,
              G_band, n_points):
    f, g = lf.f, lf.g
    i0 = int(np.searchsorted(band, x0))
    # outer arcs
    left = _arc_grid(mu1, nu1, a, n_points, "pole")
    right = _arc_grid(nu2, mu2, a, n_points, "far")
    # cumulative integrals anchored at nu1 / nu2 so junction values are exact
    I1_left = cumulative_integral(f, left[::-1])[::-1]  # int_{nu1}^{x} f
    G_left = level + cumulative_integral(g, left) - 0.0
    G_left = G_left - (G_left[-1] - (G_band[0]))  # pin G(nu1)
    G_left[0] = level
    I2_right = cumulative_integral(f, right)  # int_{nu2}^{x} f
    G_right = cumulative_integral(g, right) + G_band[-1]
    G_right[-1] = level
    f_left, g_left = f(left), g(left)
    f_right, g_right = f(right), g(right)

    J1 = float(I1_left[0])  # int_{nu1}^{mu1} f  (< 0)
    J2 = float(I2_right[-1])  # int_{nu2}^{mu2} f (> 0)
    Gn1, Gn2 = float(G_band[0]), float(G_band[-1])
    F1 = float(I1_band[i0])  # int_{nu1}^{x0} f
    F2 = float(I2_band[i0])  # int_{nu2}^{x0} f
    ys = {}

    def root(v):
        return math.sqrt(v) if v > 0 else math.nan

    ys["y1"] = root(2 * level - 2 * Gn1)
    ys["y2"] = root(J2 ** 2 + 2 * level - 2 * Gn2)
    ys["y3"] = -root(2 * level - 2 * Gn2)
    ys["y4"] = -root(J1 ** 2 + 2 * level - 2 * Gn1)
    K2 = 2 * level  # V2(nu1, y1) = y1^2 + 2 G(nu1)
    K3 = J2 ** 2 + 2 * level  # V3(nu2, y2)
    K6 = 2 * level  # V3(nu2, y3)
    K7 = J1 ** 2 + 2 * level  # V2(nu1, y4)
    ys["y5"] = root(K2 + eps * (x0 - nu1)) - F1
    ys["y6"] = root(K3 - eps * (nu2 - x0)) - F2
    ys["y7"] = -F2 - root(K6 + eps * (nu2 - x0))
    ys["y8"] = -F1 - root(K7 - eps * (x0 - nu1))

    bl = band[: i0 + 1]
    br = band[i0:]
    sl = slice(0, i0 + 1)
    sr = slice(i0, None)

    def clip(r):
        return np.sqrt(np.clip(r, 0.0, None))

    # top arcs: y as a function of x
    y_o1 = clip(2 * level - 2 * G_left)
    y_o2 = -I1_band[sl] + clip(K2 - 2 * G_band[sl] + eps * (bl - nu1))
    y_o3 = -I2_band[sr] + clip(K3 - 2 * G_band[sr] + eps * (br - nu2))
    y_o4 = -I2_right + clip(K3 - 2 * G_right)
    # bottom arcs
    y_o5 = -clip(2 * level - 2 * G_right)
    y_o6 = -I2_band[sr] - clip(K6 - 2 * G_band[sr] - eps * (br - nu2))
    y_o7 = -I1_band[sl] - clip(K7 - 2 * G_band[sl] - eps * (bl - nu1))
    y_o8 = -I1_left - clip(K7 - 2 * G_left)

    radicands_ok = (
        np.all(K2 - 2 * G_band[sl] + eps * (bl - nu1) > 0)
        and np.all(K3 - 2 * G_band[sr] + eps * (br - nu2) > 0)
        and np.all(K6 - 2 * G_band[sr] - eps * (br - nu2) > 0)
        and np.all(K7 - 2 * G_band[sl] - eps * (bl - nu1) > 0)
        and all(math.isfinite(v) for v in ys.values())
    )
    floor = min(float(np.min(y_o2)), float(np.min(y_o3)), float(np.min(-y_o6)), float(np.min(-y_o7)))
    if not radicands_ok:
        return {"floor": -math.inf, "y": ys, "curve": None}

    fb_l, gb_l, fb_r, gb_r = f_band[sl], g_band[sl], f_band[sr], g_band[sr]
    I1l, I2r = I1_band[sl], I2_band[sr]

    def seg(name, V, xs, yv, I, gv, fv, nu):
        return Segment(name, V, xs, yv, *segment_flux(V, yv, I, gv, fv, eps))

    zeros_l = np.zeros_like(left)
    zeros_r = np.zeros_like(right)
    segments = [
        seg("omega1", "V1", left, y_o1, zeros_l, g_left, f_left, nu1),
        seg("omega2", "V4", bl, y_o2, I1l, gb_l, fb_l, nu1),
        seg("omega3", "V5", br, y_o3, I2r, gb_r, fb_r, nu2),
        seg("omega4", "V3", right, y_o4, I2_right, g_right, f_right, nu2),
        seg("omega5", "V1", right[::-1], y_o5[::-1], zeros_r, g_right[::-1], f_right[::-1], nu2),
        seg("omega6", "V6", br[::-1], y_o6[::-1], I2r[::-1], gb_r[::-1], fb_r[::-1], nu2),
        seg("omega7", "V7", bl[::-1], y_o7[::-1], I1l[::-1], gb_l[::-1], fb_l[::-1], nu1),
        seg("omega8", "V2", left[::-1], y_o8[::-1], I1_left[::-1], g_left[::-1], f_left[::-1], nu1),
    ]
    # vertical pieces at x0; outward normal -x on top (region is to the right), +x at the bottom
    ct = np.linspace(ys["y5"], ys["y6"], n_points)
    cb = np.linspace(ys["y7"], ys["y8"], n_points)
    connectors = [
        Segment("connector_top", "x", np.full_like(ct, x0), ct, -ct, -ct, np.abs(ct)),
        Segment("connector_bottom", "x", np.full_like(cb, x0), cb, cb, cb, np.abs(cb)),
    ]
    curve = TransversalCurve(
        a=a, nu1=nu1, nu2=nu2, x0=x0, mu1=mu1, mu2=mu2, epsilon=eps, level=level, y=ys,
        segments=segments, connectors=connectors, balance=math.nan, band_floor=floor,
        band_threshold=math.nan, nu_integral=math.nan,
    )
    return {"floor": floor, "y": ys, "curve": curve}

"""Equilibria, Lyapunov quantity and analytic cycle-existence certificates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .algebra import ExpWeight, Polynomial, PowerWeight, RationalFn, WeightedFn, real_roots, weighted_derive
from .errors import (
    NoZeroNearby,
    NonIsolatedEquilibrium,
    NotAnEquilibrium,
    PreconditionError,
    ZeroPolynomial,
)
from .reduction import LienardForm, QuadraticSystem, to_lienard

__all__ = [
    "EquilibriumReport",
    "CycleCertificate",
    "FocusCriterion",
    "Conditions21Report",
    "LienardFamily",
    "classify",
    "find_equilibria",
    "lyapunov_quantity",
    "reverse_time",
    "track_equilibrium",
    "drift_slope",
    "theorem1_certify",
    "abcd_criterion",
    "conditions21_check",
    "theorem5_certify",
    "DISC_TOL",
]

DISC_TOL = 1e-10  # |trace^2 - 4 det| below this is a border case
TRACE_TOL = 1e-12
EQ_TOL = 1e-9


# ---------------------------------------------------------------------------
# equilibria


@dataclass(frozen=True)
class EquilibriumReport:
    location: Tuple[float, float]
    jacobian: np.ndarray = field(compare=False)
    kind: str  # focus | node | saddle | center-candidate | border | degenerate
    stability: Optional[str]  # stable | unstable | None
    x0: Optional[float] = None
    jet: Optional[Dict[str, float]] = None  # f1, f2, g1, g2
    chart: str = "lienard"

    def __post_init__(self):
        object.__setattr__(self, "location", (float(self.location[0]), float(self.location[1])))
        if self.x0 is not None:
            object.__setattr__(self, "x0", float(self.x0))
        if self.jet is not None:
            object.__setattr__(self, "jet", {k: float(v) for k, v in self.jet.items()})

    @property
    def trace(self) -> float:
        return float(np.trace(self.jacobian))

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.jacobian))

    @property
    def discriminant(self) -> float:
        return self.trace ** 2 - 4 * self.det

    @property
    def classification(self) -> str:
        if self.kind == "saddle" or not self.stability:
            return self.kind
        return f"{self.stability} {self.kind}"

    def to_dict(self) -> dict:
        return {
            "location": list(self.location), "x0": self.x0, "jet": self.jet,
            "jacobian": self.jacobian.tolist(), "classification": self.classification,
            "chart": self.chart,
        }


def classify(jac) -> Tuple[str, Optional[str]]:
    """(kind, stability) from trace/determinant of a 2x2 Jacobian."""
    jac = np.asarray(jac, dtype=float)
    tr = jac[0, 0] + jac[1, 1]
    det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
    scale = 1.0 + float(np.max(np.abs(jac)))
    if abs(det) <= 1e-12 * scale * scale:
        return "degenerate", None
    if det < 0:
        return "saddle", "unstable"
    disc = tr * tr - 4 * det
    if abs(tr) <= TRACE_TOL * scale:
        return "center-candidate", None
    stab = "stable" if tr < 0 else "unstable"
    if disc < -DISC_TOL:
        return "focus", stab
    if disc > DISC_TOL:
        return "node", stab
    return "border", stab


def _jet(lf: LienardForm, x0: float) -> Dict[str, float]:
    f1 = weighted_derive(lf.f, 1).scalar(x0)
    f2 = weighted_derive(lf.f, 2).scalar(x0) / 2
    g1 = weighted_derive(lf.g, 1).scalar(x0)
    g2 = weighted_derive(lf.g, 2).scalar(x0) / 2
    return {"f1": f1, "f2": f2, "g1": g1, "g2": g2}


def _lienard_equilibria(lf: LienardForm) -> List[EquilibriumReport]:
    num = lf.g.core.numerator
    try:
        roots = real_roots(num.trimmed())
    except ZeroPolynomial:
        raise NonIsolatedEquilibrium("g vanishes identically") from None
    poles = lf.poles
    out = []
    for r in roots:
        if any(abs(r - p) <= EQ_TOL * (1 + abs(p)) for p in poles):
            continue
        jac = lf.jacobian(r, 0.0)
        kind, stab = classify(jac)
        out.append(EquilibriumReport((r, 0.0), jac, kind, stab, x0=r, jet=_jet(lf, r), chart="lienard"))
    return out


def _ycoeffs(s: QuadraticSystem):
    """Each equation as C(x) + B(x) y + c y^2 with polynomial coefficients in x."""
    eq1 = (Polynomial((0.0, s.alpha1, s.a1)), Polynomial((s.beta1, s.b1)), Polynomial((s.c1,)))
    eq2 = (Polynomial((0.0, s.alpha2, s.a2)), Polynomial((s.beta2, s.b2)), Polynomial((s.c2,)))
    return eq1, eq2


def _ydeg(eq) -> int:
    for k in (2, 1, 0):
        if not eq[k].is_zero():
            return k
    return -1


def _det(m):
    n = len(m)
    if n == 1:
        return m[0][0]
    total = Polynomial((0.0,))
    for j in range(n):
        if m[0][j].is_zero():
            continue
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        term = m[0][j] * _det(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def _resultant_in_y(eq1, eq2, d1: int, d2: int) -> Polynomial:
    """Sylvester resultant with respect to y of two polynomials of y-degree d1, d2."""
    zero = Polynomial((0.0,))
    size = d1 + d2
    rows = []
    for eq, d, other in ((eq1, d1, d2), (eq2, d2, d1)):
        desc = [eq[k] for k in range(d, -1, -1)]  # leading first
        for shift in range(other):
            rows.append([zero] * shift + desc + [zero] * (size - shift - len(desc)))
    return _det(rows)


def _newton2(s: QuadraticSystem, x: float, y: float, iters: int = 60):
    for _ in range(iters):
        fx, fy = s.rhs(x, y)
        J = s.jacobian(x, y)
        det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
        if det == 0.0:
            break
        dx = (J[1, 1] * fx - J[0, 1] * fy) / det
        dy = (-J[1, 0] * fx + J[0, 0] * fy) / det
        x, y = x - dx, y - dy
        if abs(dx) + abs(dy) <= 1e-16 * (1 + abs(x) + abs(y)):
            break
    return x, y


def _quadratic_equilibria(s: QuadraticSystem) -> List[EquilibriumReport]:
    eq1, eq2 = _ycoeffs(s)
    d1, d2 = _ydeg(eq1), _ydeg(eq2)
    if d1 < 0 or d2 < 0:
        raise NonIsolatedEquilibrium("one equation vanishes identically")
    if d1 == 0 and d2 == 0:
        raise NonIsolatedEquilibrium("both equations are independent of y")
    res = _resultant_in_y(eq1, eq2, d1, d2).trimmed()
    try:
        xs = real_roots(res)
    except ZeroPolynomial:
        raise NonIsolatedEquilibrium("the two nullclines share a component") from None
    scale = 1.0 + max(abs(v) for v in s.as_tuple())
    pts: List[Tuple[float, float, float]] = []
    for x in xs:
        cands = []
        for eq in (eq1, eq2):
            py = Polynomial((eq[0](x), eq[1](x), eq[2](x)))
            if py.max_abs_coeff() <= 1e-12 * scale * (1 + abs(x)) ** 2:
                continue
            try:
                cands += real_roots(py.trimmed())
            except ZeroPolynomial:
                continue
        if not cands:
            raise NonIsolatedEquilibrium(f"a line of equilibria through x={x!r}")
        for y in cands:
            xe, ye = _newton2(s, x, y)
            r = s.rhs(xe, ye)
            if abs(r[0]) + abs(r[1]) > 1e-8 * scale * (1 + abs(xe) + abs(ye)) ** 2:
                continue
            res = abs(r[0]) + abs(r[1])
            dup = [k for k, (px, py_, _) in enumerate(pts)
                   if abs(xe - px) + abs(ye - py_) <= 1e-8 * (1 + abs(xe) + abs(ye))]
            if not dup:
                pts.append((xe, ye, res))
            elif res < pts[dup[0]][2]:
                pts[dup[0]] = (xe, ye, res)
    pts = [(xe, ye) for xe, ye, _ in pts]
    pts.sort()
    lf = None
    if s.c1 == 0.0 and (s.b1 != 0.0 or s.beta1 != 0.0):
        lf = to_lienard(s)
    out = []
    for xe, ye in pts:
        jac = s.jacobian(xe, ye)
        kind, stab = classify(jac)
        jet = None
        if lf is not None and abs(s.beta1 + s.b1 * xe) > EQ_TOL:
            jet = _jet(lf, xe)
        out.append(EquilibriumReport((xe, ye), jac, kind, stab, x0=xe if jet else None, jet=jet, chart="original"))
    return out


def find_equilibria(obj) -> List[EquilibriumReport]:
    """All real, isolated equilibria of a quadratic system or a Liénard form."""
    if isinstance(obj, LienardForm):
        return _lienard_equilibria(obj)
    if isinstance(obj, QuadraticSystem):
        return _quadratic_equilibria(obj)
    raise TypeError(f"unsupported input {type(obj).__name__}")


# ---------------------------------------------------------------------------
# Lyapunov quantity and the small-cycle certificate


def lyapunov_quantity(lf: LienardForm, x0: float, tol: float = EQ_TOL) -> float:
    """L = f''(x0) g'(x0) - g''(x0) f'(x0) at a weak focus f(x0) = g(x0) = 0."""
    fv, gv = lf.f.scalar(x0), lf.g.scalar(x0)
    if abs(fv) > tol or abs(gv) > tol:
        raise NotAnEquilibrium(f"f({x0})={fv:.3g}, g({x0})={gv:.3g}; both must vanish")
    j = _jet(lf, x0)
    return 2 * j["f2"] * j["g1"] - 2 * j["g2"] * j["f1"]


def reverse_time(lf: LienardForm) -> LienardForm:
    """Image under (x, y, t) -> (x, -y, -t): the damping f changes sign."""
    core = lf.f.core
    neg = WeightedFn(RationalFn(-core.numerator, core.denominator, poles=core.poles), lf.f.weight)
    return LienardForm(neg, lf.g, q=lf.q, pole=lf.pole, weight_kind=lf.weight_kind)


def _reflect_poly(p: Polynomial, center: float) -> Polynomial:
    lin = Polynomial((2.0 * center, -1.0))
    out = Polynomial((0.0,))
    for k, c in enumerate(p.coefficients):
        out = out + (lin ** k) * c
    return out


def _reflect_weighted(w: WeightedFn, center: float, sign: float) -> WeightedFn:
    core, wt = w.core, w.weight
    num = _reflect_poly(core.numerator, center) * sign
    den = _reflect_poly(core.denominator, center)
    if isinstance(wt, PowerWeight):
        wt = PowerWeight(wt.base_offset + 2.0 * center * wt.base_slope, -wt.base_slope, wt.exponent)
    elif isinstance(wt, ExpWeight):
        num = num * math.exp(2.0 * center * wt.rate)
        wt = ExpWeight(-wt.rate)
    return WeightedFn(RationalFn(num, den, poles=[2.0 * center - r for r in core.poles]), wt)


def mirror(lf: LienardForm, center: float) -> LienardForm:
    """Image under x -> 2 center - x (y -> -y): f(x) -> f(2c - x), g(x) -> -g(2c - x).

    Reflecting about the pole swaps the two half-lines, so a focus on the
    left can be studied with the same orientation as one on the right.
    """
    pole = None if lf.pole is None else 2.0 * center - lf.pole
    return LienardForm(_reflect_weighted(lf.f, center, 1.0), _reflect_weighted(lf.g, center, -1.0),
                       q=lf.q, pole=pole, weight_kind=lf.weight_kind)


@dataclass(frozen=True)
class LienardFamily:
    """eps -> LienardForm, smooth in (x, eps); ``epsilon`` is the probe value."""

    build: Callable[[float], LienardForm]
    epsilon: float

    @classmethod
    def from_systems(cls, build_system: Callable[[float], QuadraticSystem], epsilon: float) -> "LienardFamily":
        return cls(lambda e: to_lienard(build_system(e)), epsilon)

    def reversed(self) -> "LienardFamily":
        b = self.build
        return LienardFamily(lambda e: reverse_time(b(e)), self.epsilon)


def track_equilibrium(family: LienardFamily, x0: float, epsilon: Optional[float] = None,
                      n_steps: int = 10) -> float:
    """Follow the zero of G(., eps) from x0 at eps = 0 by Newton continuation."""
    eps = family.epsilon if epsilon is None else epsilon
    x = x0
    for k in range(1, n_steps + 1):
        lf = family.build(eps * k / n_steps)
        dg = weighted_derive(lf.g, 1)
        for _ in range(50):
            gv, d = lf.g.scalar(x), dg.scalar(x)
            if d == 0.0 or not math.isfinite(d):
                raise NoZeroNearby(f"g' vanishes near x={x}")
            step = gv / d
            x -= step
            if any(abs(x - p) < 1e-9 for p in lf.poles) or not math.isfinite(x):
                raise NoZeroNearby("continuation ran into a pole")
            if abs(step) <= 1e-15 * (1 + abs(x)):
                break
        else:
            raise NoZeroNearby(f"Newton did not converge at eps={eps * k / n_steps}")
        if abs(lf.g.scalar(x)) > 1e-10:
            raise NoZeroNearby(f"residual too large at eps={eps * k / n_steps}")
    return x


_OPS = {">": lambda a, b: a > b, "<": lambda a, b: a < b, ">=": lambda a, b: a >= b,
        "<=": lambda a, b: a <= b, "!=": lambda a, b: a != b}


@dataclass
class CycleCertificate:
    kind: str  # theorem1 | abcd | theorem5
    orientation: Optional[str]  # direct | mirrored (None for theorem5)
    witnesses: Dict[str, float]
    inequalities: List[Tuple[str, str, str, float]]  # (label, witness, op, bound)
    region: dict

    def verify(self) -> bool:
        ok = all(_OPS[op](self.witnesses[w], bound) for _lbl, w, op, bound in self.inequalities)
        if self.kind == "abcd":
            w = self.witnesses
            expr = w["A"] * w["D"] - w["B"] * w["C"] + w["B"] * w["D"] * (1 + w["c2"])
            ok = ok and math.isclose(expr, w["expression"], rel_tol=1e-12, abs_tol=1e-15)
        return ok

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "orientation": self.orientation, "witnesses": dict(self.witnesses),
            "inequalities": [list(i) for i in self.inequalities], "region": self.region,
        }


def theorem1_certify(family: LienardFamily, x0: float, tol: float = 1e-12) -> Optional[CycleCertificate]:
    """Small-cycle certificate near a weak focus of ``family.build(0)``.

    direct orientation: g'(x0) > 0, L < 0, F(x_eps, eps) > 0
    mirrored (time-reversed): g'(x0) > 0, L > 0, F(x_eps, eps) < 0
    """
    lf0 = family.build(0.0)
    L = lyapunov_quantity(lf0, x0)
    g1 = weighted_derive(lf0.g, 1).scalar(x0)
    if not g1 > 0 or abs(L) <= tol:
        return None
    x_eps = track_equilibrium(family, x0)
    F = family.build(family.epsilon).f.scalar(x_eps)
    if L < 0 and F > 0:
        orient, ineq = "direct", [("L<0", "L", "<", 0.0), ("F(x_eps,eps)>0", "F", ">", 0.0)]
    elif L > 0 and F < 0:
        orient, ineq = "mirrored", [("L>0", "L", ">", 0.0), ("F(x_eps,eps)<0", "F", "<", 0.0)]
    else:
        return None
    ineq.insert(0, ("g'(x0)>0", "g1", ">", 0.0))
    return CycleCertificate(
        kind="theorem1", orientation=orient,
        witnesses={"x0": x0, "epsilon": family.epsilon, "x_eps": x_eps, "L": L, "g1": g1, "F": F},
        inequalities=ineq,
        region={"type": "neighborhood", "center": [x_eps, 0.0]},
    )


# ---------------------------------------------------------------------------
# A/B/C/D focus criterion


@dataclass(frozen=True)
class FocusCriterion:
    A: float
    B: float
    C: float
    D: float
    c2: float
    detuning: float  # alpha1 + beta2 = -f(0)

    @property
    def expression(self) -> float:
        return self.A * self.D - self.B * self.C + self.B * self.D * (1 + self.c2)

    def to_dict(self) -> dict:
        return {"A": self.A, "B": self.B, "C": self.C, "D": self.D,
                "expression": self.expression, "detuning": self.detuning}


def abcd_criterion(s: QuadraticSystem, max_detuning: float = 0.1,
                   tol: float = 1e-12) -> Tuple[FocusCriterion, Optional[CycleCertificate]]:
    """Weak-focus test at the origin for b1 = beta1 = 1, c1 = 0.

    D is g'(0) of the reduced form and, when alpha1 + beta2 = 0, the
    expression AD - BC + BD(1 + c2) is L/2.  Since f(0) = -(alpha1 + beta2),
    the direct orientation (expression < 0) needs alpha1 + beta2 < 0 and the
    mirrored one (expression > 0) needs alpha1 + beta2 > 0.  A detuning of
    exactly 0 certifies the family for small detuning of the reported sign.
    """
    if s.b1 != 1.0 or s.beta1 != 1.0 or s.c1 != 0.0:
        raise PreconditionError("abcd_criterion needs b1 = beta1 = 1 and c1 = 0")
    a1, c2, al1, a2, b2, al2, be2 = s.a1, s.c2, s.alpha1, s.a2, s.b2, s.alpha2, s.beta2
    crit = FocusCriterion(
        A=-b2 + 2 * a1 * c2 - a1,
        B=-b2 - be2 + 2 * al1 * c2 - 2 * a1,
        C=-a2 - 2 * al2 + al1 * b2 + a1 * be2 + al1 * be2 - c2 * al1 ** 2,
        D=-al2 + al1 * be2,
        c2=c2,
        detuning=al1 + be2,
    )
    expr = crit.expression
    if not crit.D > 0 or abs(expr) <= tol or abs(crit.detuning) > max_detuning:
        return crit, None
    if expr < 0:
        orient, need = "direct", -1.0
        ineq = [("AD-BC+BD(1+c2)<0", "expression", "<", 0.0)]
    else:
        orient, need = "mirrored", 1.0
        ineq = [("AD-BC+BD(1+c2)>0", "expression", ">", 0.0)]
    if crit.detuning * need < 0:
        return crit, None
    ineq.insert(0, ("D>0", "D", ">", 0.0))
    ineq.append(("detuning has the required sign", "signed_detuning", ">=", 0.0))
    w = crit.to_dict()
    w.update(c2=c2, required_detuning_sign=need, signed_detuning=need * crit.detuning)
    return crit, CycleCertificate("abcd", orient, w, ineq, {"type": "neighborhood", "center": [0.0, 0.0]})


# ---------------------------------------------------------------------------
# attractor conditions and certificate

COND21_LABELS = (
    "0 < 2 c2 < b1",
    "beta1 > 0",
    "a1 beta1 / b1 > alpha1",
    "a1 (2 c2 - b1) / b1 > b2",
    "a1 (b1 b2 - a1 c2) / b1^2 > a2",
)


@dataclass(frozen=True)
class Conditions21Report:
    passed: bool
    margins: Tuple[float, ...]
    labels: Tuple[str, ...] = COND21_LABELS

    def violated(self) -> List[str]:
        return [lbl for lbl, m in zip(self.labels, self.margins) if not m > 0]

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> dict:
        return {"passed": self.passed, "margins": dict(zip(self.labels, self.margins))}


def conditions21_check(s: QuadraticSystem) -> Conditions21Report:
    """Evaluate the five inequalities; each margin is positive iff it holds."""
    a1, b1, c2, al1, be1, a2, b2 = s.a1, s.b1, s.c2, s.alpha1, s.beta1, s.a2, s.b2
    m1 = min(2 * c2, b1 - 2 * c2)
    if b1 == 0.0:
        margins = (m1, be1, math.nan, math.nan, math.nan)
    else:
        margins = (
            m1,
            be1,
            a1 * be1 / b1 - al1,
            a1 * (2 * c2 - b1) / b1 - b2,
            a1 * (b1 * b2 - a1 * c2) / b1 ** 2 - a2,
        )
    passed = s.c1 == 0.0 and all(m > 0 for m in margins)
    return Conditions21Report(passed, margins)


def theorem5_certify(s: QuadraticSystem) -> Optional[CycleCertificate]:
    """A cycle in {x > a}, a = -beta1/b1, from the five attractor inequalities plus a unique unstable focus there."""
    if s.c1 != 0.0 or not s.b1 > 0:
        return None
    rep = conditions21_check(s)
    if not rep.passed:
        return None
    a = -s.beta1 / s.b1
    eqs = [e for e in find_equilibria(s) if e.location[0] > a]
    if len(eqs) != 1:
        return None
    e = eqs[0]
    if e.kind != "focus" or e.stability != "unstable":
        return None
    w = {f"margin{i + 1}": m for i, m in enumerate(rep.margins)}
    w.update(trace=e.trace, discriminant=e.discriminant, n_equilibria_right=1.0,
             eq_x=e.location[0], eq_y=e.location[1], pole=a)
    ineq = [(lbl, f"margin{i + 1}", ">", 0.0) for i, lbl in enumerate(rep.labels)]
    ineq += [("unstable: trace > 0", "trace", ">", 0.0),
             ("focus: discriminant < -tol", "discriminant", "<", -DISC_TOL)]
    return CycleCertificate("theorem5", None, w, ineq, {"type": "half-plane", "x_gt": a})


def drift_slope(family: LienardFamily, x0: float, eps_values: Sequence[float], degree: int = 3) -> float:
    """d x_eps / d eps at eps = 0 from a polynomial fit of the tracked zero.

    The drift is strongly curved on typical grids, so a straight line over a
    one-sided range is biased; a cubic over a grid symmetric in eps is not.
    """
    es = np.asarray(eps_values, dtype=float)
    xs = np.array([track_equilibrium(family, x0, float(e)) for e in es])
    return float(np.polynomial.polynomial.polyfit(es, xs, degree)[1])

"""From a planar quadratic system to the Liénard equation x'' + f(x) x' + g(x) = 0.

Pipeline::

    s, rec = eliminate_c1(s)        # shear (or swap) so that c1 == 0
    lf = to_lienard(s)              # Q, R, P and the weighted f, g

``normalize_unit`` is optional and only applies when b1, alpha1, beta1 are
all nonzero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .algebra import (
    ExpWeight,
    Polynomial,
    PowerWeight,
    RationalFn,
    WeightedFn,
    real_roots,
)
from .errors import DegenerateFirstEquation, PreconditionError, QDegenerate

__all__ = [
    "QuadraticSystem",
    "TransformRecord",
    "LienardForm",
    "LienardCoeffs",
    "eliminate_c1",
    "line_type",
    "to_lienard",
    "normalize_unit",
    "prop4_map",
    "lienard_coeffs",
]

COEFF_NAMES = ("a1", "b1", "c1", "alpha1", "beta1", "a2", "b2", "c2", "alpha2", "beta2")


@dataclass(frozen=True)
class QuadraticSystem:
    """x' = a1 x^2 + b1 xy + c1 y^2 + alpha1 x + beta1 y
    y' = a2 x^2 + b2 xy + c2 y^2 + alpha2 x + beta2 y
    """

    a1: float = 0.0
    b1: float = 0.0
    c1: float = 0.0
    alpha1: float = 0.0
    beta1: float = 0.0
    a2: float = 0.0
    b2: float = 0.0
    c2: float = 0.0
    alpha2: float = 0.0
    beta2: float = 0.0

    chart = "original"

    def __post_init__(self):
        for f in fields(self):
            v = float(getattr(self, f.name))
            if not math.isfinite(v):
                raise PreconditionError(f"coefficient {f.name} is not finite")
            object.__setattr__(self, f.name, v)

    @classmethod
    def from_dict(cls, d: dict) -> "QuadraticSystem":
        return cls(**{k: float(d.get(k, 0.0)) for k in COEFF_NAMES})

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in COEFF_NAMES}

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, k) for k in COEFF_NAMES)

    def rhs(self, x: float, y: float):
        return (
            self.a1 * x * x + self.b1 * x * y + self.c1 * y * y + self.alpha1 * x + self.beta1 * y,
            self.a2 * x * x + self.b2 * x * y + self.c2 * y * y + self.alpha2 * x + self.beta2 * y,
        )

    def jacobian(self, x: float, y: float) -> np.ndarray:
        return np.array(
            [
                [2 * self.a1 * x + self.b1 * y + self.alpha1, self.b1 * x + 2 * self.c1 * y + self.beta1],
                [2 * self.a2 * x + self.b2 * y + self.alpha2, self.b2 * x + 2 * self.c2 * y + self.beta2],
            ]
        )

    # -- the line beta1 + b1 x = 0 and the section x' = 0 -----------------

    @property
    def pole(self) -> Optional[float]:
        """Abscissa of the line beta1 + b1 x = 0 (None when b1 == 0)."""
        return -self.beta1 / self.b1 if self.b1 != 0.0 else None

    def pole_factor(self, x):
        return self.beta1 + self.b1 * x

    def section(self, x: float, y: float) -> float:
        """x' itself: its zero set is the section used by the return maps."""
        return self.rhs(x, y)[0]

    def section_point(self, x: float):
        """Point of {x' = 0} with abscissa x (needs c1 == 0 and x off the pole line)."""
        if self.c1 != 0.0:
            raise PreconditionError("section_point needs c1 == 0")
        d = self.pole_factor(x)
        if d == 0.0:
            raise PreconditionError("section_point on the pole line")
        return x, -(self.a1 * x * x + self.alpha1 * x) / d

    def section_accel(self, x: float) -> float:
        """x'' on the section; negative where x has a local maximum."""
        sx, sy = self.section_point(x)
        return self.pole_factor(sx) * self.rhs(sx, sy)[1]

    def swapped(self) -> "QuadraticSystem":
        """Same field with the roles of x and y exchanged."""
        return QuadraticSystem(
            a1=self.c2, b1=self.b2, c1=self.a2, alpha1=self.beta2, beta1=self.alpha2,
            a2=self.c1, b2=self.b1, c2=self.a1, alpha2=self.beta1, beta2=self.alpha1,
        )


@dataclass(frozen=True)
class TransformRecord:
    """Changes of variables applied to reach the current system.

    ``applied_steps`` holds tuples ``("swap",)``, ``("shear", nu)`` or
    ``("scale", sx, sy, st)`` and composes left to right; ``map_state``
    takes original coordinates to the new ones.  For a scale step the
    relation is x = sx * xbar, y = sy * ybar, t = st * tbar.
    """

    nu: float = 0.0
    kappa: float = 0.0
    rho: float = 0.0
    scale_x: float = 1.0
    scale_y: float = 1.0
    scale_t: float = 1.0
    applied_steps: tuple = ()

    def then(self, other: "TransformRecord") -> "TransformRecord":
        return TransformRecord(
            nu=other.nu if other.nu else self.nu,
            kappa=other.kappa if other.applied_steps else self.kappa,
            rho=other.rho if other.applied_steps else self.rho,
            scale_x=self.scale_x * other.scale_x,
            scale_y=self.scale_y * other.scale_y,
            scale_t=self.scale_t * other.scale_t,
            applied_steps=self.applied_steps + other.applied_steps,
        )

    def map_state(self, x: float, y: float):
        for step in self.applied_steps:
            if step[0] == "swap":
                x, y = y, x
            elif step[0] == "shear":
                x = x + step[1] * y
            elif step[0] == "scale":
                x, y = x / step[1], y / step[2]
        return x, y

    def unmap_state(self, x: float, y: float):
        for step in reversed(self.applied_steps):
            if step[0] == "swap":
                x, y = y, x
            elif step[0] == "shear":
                x = x - step[1] * y
            elif step[0] == "scale":
                x, y = x * step[1], y * step[2]
        return x, y

    def eq2_residuals(self, s: "QuadraticSystem"):
        """Residuals of kappa = a1 + nu a2, kappa nu^2 + rho nu = c1 + nu c2,
        rho + 2 kappa nu = b1 + nu b2 against the system the shear acted on."""
        nu, k, r = self.nu, self.kappa, self.rho
        return (
            k - (s.a1 + nu * s.a2),
            k * nu * nu + r * nu - (s.c1 + nu * s.c2),
            r + 2 * k * nu - (s.b1 + nu * s.b2),
        )

    def to_dict(self) -> dict:
        return {
            "nu": self.nu, "kappa": self.kappa, "rho": self.rho,
            "scale_x": self.scale_x, "scale_y": self.scale_y, "scale_t": self.scale_t,
            "applied_steps": [list(s) for s in self.applied_steps],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TransformRecord":
        steps = tuple((s[0],) + tuple(float(v) for v in s[1:]) for s in d.get("applied_steps", ()))
        return cls(
            nu=float(d.get("nu", 0.0)), kappa=float(d.get("kappa", 0.0)), rho=float(d.get("rho", 0.0)),
            scale_x=float(d.get("scale_x", 1.0)), scale_y=float(d.get("scale_y", 1.0)),
            scale_t=float(d.get("scale_t", 1.0)), applied_steps=steps,
        )


def eliminate_c1(s: QuadraticSystem):
    """Make c1 vanish with x1 = x + nu y, or with the x <-> y swap when a2 == 0.

    nu is the real root of smallest magnitude of
    a2 nu^3 + (a1 - b2) nu^2 + (c2 - b1) nu + c1 = 0.
    """
    if s.c1 == 0.0:
        return s, TransformRecord(nu=0.0, kappa=s.a1, rho=s.b1)
    if s.a2 == 0.0:
        t = s.swapped()
        return t, TransformRecord(nu=0.0, kappa=t.a1, rho=t.b1, applied_steps=(("swap",),))

    roots = real_roots(Polynomial((s.c1, s.c2 - s.b1, s.a1 - s.b2, s.a2)))
    nu = min(roots, key=abs)
    kappa = s.a1 + nu * s.a2
    rho = s.b1 + nu * s.b2 - 2.0 * kappa * nu
    al1 = s.alpha1 + nu * s.alpha2
    out = QuadraticSystem(
        a1=kappa,
        b1=rho,
        c1=0.0,
        alpha1=al1,
        beta1=s.beta1 + nu * s.beta2 - nu * al1,
        a2=s.a2,
        b2=s.b2 - 2.0 * nu * s.a2,
        c2=s.c2 + s.a2 * nu * nu - s.b2 * nu,
        alpha2=s.alpha2,
        beta2=s.beta2 - nu * s.alpha2,
    )
    return out, TransformRecord(nu=nu, kappa=kappa, rho=rho, applied_steps=(("shear", nu),))


def line_type(s: QuadraticSystem) -> str:
    """'invariant', 'transversal' or 'no_line' for the line beta1 + b1 x = 0."""
    if s.c1 != 0.0:
        raise PreconditionError("line_type needs c1 == 0")
    if s.b1 == 0.0:
        return "no_line"
    r = s.beta1 / s.b1
    val = s.a1 * r * r - s.alpha1 * r
    scale = abs(s.a1 * r * r) + abs(s.alpha1 * r)
    if abs(val) <= 1e-14 * scale or val == 0.0:
        return "invariant"
    return "transversal"


class LienardForm:
    """x' = y, y' = -f(x) y - g(x), with the reduction data that produced it.

    ``Q, R, P`` are the rational coefficients of the intermediate system
    x' = y, y' = -Q y^2 - R y - P.  A form built straight from ``f`` and
    ``g`` (``LienardForm.from_functions``) has no source system.
    """

    chart = "lienard"

    def __init__(self, f: WeightedFn, g: WeightedFn, *, Q=None, R=None, P=None, q=None,
                 pole=None, weight_kind=None, system: Optional[QuadraticSystem] = None,
                 record: Optional[TransformRecord] = None):
        self.f = f
        self.g = g
        self.Q, self.R, self.P = Q, R, P
        self.q = q
        self.pole = pole
        self.weight_kind = weight_kind
        self.system = system
        self.record = record if record is not None else TransformRecord()
        self._f = f.scalar
        self._g = g.scalar

    @classmethod
    def from_functions(cls, f, g) -> "LienardForm":
        """Build from polynomials / WeightedFns with no reduction history."""
        if not isinstance(f, WeightedFn):
            f = WeightedFn.polynomial(f)
        if not isinstance(g, WeightedFn):
            g = WeightedFn.polynomial(g)
        poles = sorted(set(f.poles) | set(g.poles))
        return cls(f, g, pole=poles[0] if len(poles) == 1 else None)

    def rhs(self, x: float, y: float):
        return y, -self._f(x) * y - self._g(x)

    def jacobian(self, x: float, y: float) -> np.ndarray:
        from .algebra import weighted_derive

        fp = weighted_derive(self.f, 1)(x)
        gp = weighted_derive(self.g, 1)(x)
        return np.array([[0.0, 1.0], [-fp * y - gp, -self.f(x)]])

    def section(self, x: float, y: float) -> float:
        return y

    def section_point(self, x: float):
        return x, 0.0

    def section_accel(self, x: float) -> float:
        return -self._g(x)

    @property
    def poles(self) -> tuple:
        return tuple(sorted(set(self.f.poles) | set(self.g.poles)))

    # -- state maps between the source system and this chart ---------------

    def _require_system(self):
        if self.system is None:
            raise PreconditionError("this LienardForm has no source quadratic system")
        return self.system

    def shift(self, x):
        """h(x) = (a1 x^2 + alpha1 x) / (beta1 + b1 x), the shift y -> y + h."""
        s = self._require_system()
        return (s.a1 * x * x + s.alpha1 * x) / (s.beta1 + s.b1 * x)

    def exp_p(self, x):
        """e^{p(x)} with p' = Q: |beta1 + b1 x|^q, or exp(-c2 x / beta1) when b1 == 0."""
        s = self._require_system()
        if s.b1 != 0.0:
            return abs(s.beta1 + s.b1 * x) ** self.q
        return math.exp(-s.c2 * x / s.beta1)

    def to_lienard_state(self, x: float, y: float):
        """Point of the (c1-free) quadratic system -> point of this chart."""
        return x, (y + self.shift(x)) * self.exp_p(x)

    def from_lienard_state(self, x: float, y: float):
        return x, y / self.exp_p(x) - self.shift(x)

    def time_rate(self, x: float) -> float:
        """d(sigma)/dt: Liénard time per unit time of the quadratic system."""
        s = self._require_system()
        return (s.beta1 + s.b1 * x) / self.exp_p(x)


def to_lienard(s: QuadraticSystem, record: Optional[TransformRecord] = None) -> LienardForm:
    """Reduce a c1-free quadratic system to x' = y, y' = -f(x) y - g(x)."""
    if s.c1 != 0.0:
        raise PreconditionError("to_lienard needs c1 == 0 (run eliminate_c1 first)")
    if s.b1 == 0.0 and s.beta1 == 0.0:
        raise DegenerateFirstEquation(
            "|b1| + |beta1| = 0: the first equation does not depend on y"
        )
    a1, b1, al1, be1 = s.a1, s.b1, s.alpha1, s.beta1
    a2, b2, c2, al2, be2 = s.a2, s.b2, s.c2, s.alpha2, s.beta2

    D = Polynomial((be1, b1))
    h_num = Polynomial((0.0, al1, a1))
    pole_pts = [-be1 / b1] if b1 != 0.0 else []

    Q = RationalFn((-c2,), D, poles=pole_pts)
    r_num = -Polynomial((
        al1 * be1 + be1 * be2,
        b2 * be1 + b1 * be2 - 2 * al1 * c2 + 2 * a1 * be1,
        b1 * b2 - 2 * a1 * c2 + a1 * b1,
    ))
    R = RationalFn(r_num, D * D, poles=pole_pts)
    # P * D^3 = -[(a2 x^2 + alpha2 x) D^2 - (b2 x + beta2)(a1 x^2 + alpha1 x) D + c2 (a1 x^2 + alpha1 x)^2]
    p_num = -(
        Polynomial((0.0, al2, a2)) * D * D
        - Polynomial((be2, b2)) * h_num * D
        + h_num * h_num * c2
    )
    P = RationalFn(p_num, D * D * D, poles=pole_pts)

    if b1 != 0.0:
        q = -c2 / b1
        f = WeightedFn(R, PowerWeight(be1, b1, q))
        g = WeightedFn(P, PowerWeight(be1, b1, 2.0 * q))
        kind = "power"
        pole = -be1 / b1
    else:
        q = None
        f = WeightedFn(R, ExpWeight(-c2 / be1))
        g = WeightedFn(P, ExpWeight(-2.0 * c2 / be1))
        kind = "exponential"
        pole = None
    return LienardForm(f, g, Q=Q, R=R, P=P, q=q, pole=pole, weight_kind=kind, system=s,
                       record=record)


def normalize_unit(s: QuadraticSystem):
    """Rescale so that b1 = alpha1 = beta1 = 1.

    Uses x = (beta1/b1) xbar, y = (alpha1/b1) ybar, t = tbar/alpha1.
    """
    if s.b1 == 0.0 or s.beta1 == 0.0 or s.alpha1 == 0.0:
        raise PreconditionError("normalize_unit needs b1 != 0, beta1 != 0, alpha1 != 0")
    sx, sy, st = s.beta1 / s.b1, s.alpha1 / s.b1, 1.0 / s.alpha1
    # xbar' = (st/sx) x', ybar' = (st/sy) y' with x = sx xbar, y = sy ybar
    kx, ky = st / sx, st / sy
    out = QuadraticSystem(
        a1=kx * s.a1 * sx * sx,
        b1=kx * s.b1 * sx * sy,
        c1=kx * s.c1 * sy * sy,
        alpha1=kx * s.alpha1 * sx,
        beta1=kx * s.beta1 * sy,
        a2=ky * s.a2 * sx * sx,
        b2=ky * s.b2 * sx * sy,
        c2=ky * s.c2 * sy * sy,
        alpha2=ky * s.alpha2 * sx,
        beta2=ky * s.beta2 * sy,
    )
    # the three unit coefficients are exact by construction
    out = replace(out, b1=1.0, alpha1=1.0, beta1=1.0)
    rec = TransformRecord(scale_x=sx, scale_y=sy, scale_t=st, applied_steps=(("scale", sx, sy, st),))
    return out, rec


@dataclass(frozen=True)
class LienardCoeffs:
    """f = (A x + B) x |x+1|^{q-2},  g = (C1 x^3 + C2 x^2 + C3 x + C4) x (x+1)^{-3} |x+1|^{2q}."""

    A: float
    B: float
    C1: float
    C2: float
    C3: float
    C4: float
    q: float
    residuals: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if not self.residuals and abs(2 * self.q - 1) >= 1e-12:
            object.__setattr__(self, "residuals", _prop4_residuals(self))

    def f(self) -> WeightedFn:
        return WeightedFn(RationalFn((0.0, self.B, self.A), (1.0, 2.0, 1.0), poles=[-1.0]),
                          PowerWeight(1.0, 1.0, self.q))

    def g(self) -> WeightedFn:
        num = (0.0, self.C4, self.C3, self.C2, self.C1)
        return WeightedFn(RationalFn(num, (1.0, 3.0, 3.0, 1.0), poles=[-1.0]),
                          PowerWeight(1.0, 1.0, 2.0 * self.q))


def _prop4_residuals(lc: LienardCoeffs) -> tuple:
    A, B, C1, C2, C3, C4, q = lc.A, lc.B, lc.C1, lc.C2, lc.C3, lc.C4, lc.q
    k = (B - A) / (2 * q - 1) ** 2
    return (
        k * ((1 - q) * B + (3 * q - 2) * A) - (2 * C2 - 3 * C1 - C3),
        k * (B + 2 * (q - 1) * A) - (C2 - 2 * C1 - C4),
    )


def prop4_map(lc: LienardCoeffs):
    """Quadratic system (b1 = alpha1 = beta1 = 1, c2 = -q, beta2 = -1) realising lc.

    Returns ``(system, residuals)``; the system realises ``lc`` exactly iff
    both residuals vanish.
    """
    A, B, C1, C2, q = lc.A, lc.B, lc.C1, lc.C2, lc.q
    if abs(2 * q - 1) < 1e-12:
        raise QDegenerate("q = 1/2: the recovery divides by 2q - 1")
    a1 = 1 + (B - A) / (2 * q - 1)
    s = QuadraticSystem(
        a1=a1,
        b1=1.0,
        c1=0.0,
        alpha1=1.0,
        beta1=1.0,
        a2=-(q + 1) * a1 * a1 - A * a1 - C1,
        b2=-A - a1 * (2 * q + 1),
        c2=-q,
        alpha2=a1 * a1 - 2 * a1 + A * (a1 - 1) + (2 * C1 - C2),
        beta2=-1.0,
    )
    return s, _prop4_residuals(lc)


def lienard_coeffs(lf: LienardForm) -> LienardCoeffs:
    """Read A, B, C1..C4, q off a form reduced from a system with b1 = beta1 = 1."""
    s = lf._require_system()
    if s.b1 != 1.0 or s.beta1 != 1.0:
        raise PreconditionError("lienard_coeffs needs b1 = beta1 = 1")
    rn = lf.R.numerator.coefficients + (0.0,) * 3
    pn = lf.P.numerator.coefficients + (0.0,) * 5
    scale = max(abs(v) for v in rn) + 1.0
    if abs(rn[0]) > 1e-12 * scale or abs(pn[0]) > 1e-12 * (max(abs(v) for v in pn) + 1.0):
        raise PreconditionError("f(0) != 0 or g(0) != 0: not of the (A, B, C) form")
    return LienardCoeffs(A=rn[2], B=rn[1], C1=pn[4], C2=pn[3], C3=pn[2], C4=pn[1], q=lf.q)

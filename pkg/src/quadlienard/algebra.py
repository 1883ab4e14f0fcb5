"""Polynomials, rational functions and the weighted class used by the Liénard data.

Everything here is immutable.  Scalars are evaluated with plain Python
arithmetic (the integrators call these in tight loops); numpy arrays are
accepted wherever a scalar is.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy import integrate as _spi

from .errors import PoleInInterval, ZeroPolynomial

__all__ = [
    "Polynomial",
    "RationalFn",
    "PowerWeight",
    "ExpWeight",
    "WeightedFn",
    "real_roots",
    "weighted_derive",
    "definite_integral",
    "cumulative_integral",
]

# roots closer than this (relative) are merged into one with multiplicity
ROOT_MERGE_RTOL = 1e-7
# closed-form roots whose imaginary part is below this are tried as real
NEAR_REAL_RTOL = 1e-6
# leading coefficients below this fraction of the largest are treated as 0
LEADING_TRIM_RTOL = 1e-14


class Polynomial:
    """Real polynomial with coefficients in ascending degree."""

    __slots__ = ("_c",)

    def __init__(self, coeffs: Sequence[float] = (0.0,)):
        c = [float(v) for v in coeffs]
        while len(c) > 1 and c[-1] == 0.0:
            c.pop()
        if not c:
            c = [0.0]
        object.__setattr__(self, "_c", tuple(c))

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    @property
    def coefficients(self) -> tuple:
        return self._c

    @property
    def degree(self) -> int:
        return len(self._c) - 1

    def is_zero(self) -> bool:
        return len(self._c) == 1 and self._c[0] == 0.0

    def max_abs_coeff(self) -> float:
        return max(abs(v) for v in self._c)

    def __call__(self, x):
        c = self._c
        if isinstance(x, (float, int)):
            acc = 0.0
            for v in reversed(c):
                acc = acc * x + v
            return acc
        x = np.asarray(x, dtype=float)
        acc = np.zeros_like(x)
        for v in reversed(c):
            acc = acc * x + v
        return acc

    def derivative(self) -> "Polynomial":
        c = self._c
        if len(c) == 1:
            return Polynomial((0.0,))
        return Polynomial([k * c[k] for k in range(1, len(c))])

    def __add__(self, other):
        other = _as_poly(other)
        n = max(len(self._c), len(other._c))
        a = self._c + (0.0,) * (n - len(self._c))
        b = other._c + (0.0,) * (n - len(other._c))
        return Polynomial([u + v for u, v in zip(a, b)])

    __radd__ = __add__

    def __neg__(self):
        return Polynomial([-v for v in self._c])

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Polynomial([v * other for v in self._c])
        other = _as_poly(other)
        out = [0.0] * (len(self._c) + len(other._c) - 1)
        for i, u in enumerate(self._c):
            if u == 0.0:
                continue
            for j, v in enumerate(other._c):
                out[i + j] += u * v
        return Polynomial(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = Polynomial((1.0,))
        for _ in range(int(k)):
            out = out * self
        return out

    def divide_linear(self, root: float):
        """Synthetic division by ``(x - root)``; returns (quotient, remainder)."""
        c = self._c
        if len(c) == 1:
            return Polynomial((0.0,)), c[0]
        q = [0.0] * (len(c) - 1)
        acc = 0.0
        for k in range(len(c) - 1, 0, -1):
            acc = acc * root + c[k]
            q[k - 1] = acc
        rem = acc * root + c[0]
        return Polynomial(q), rem

    def trimmed(self, rtol: float = LEADING_TRIM_RTOL) -> "Polynomial":
        """Drop leading coefficients that are rounding noise."""
        c = list(self._c)
        scale = max(abs(v) for v in c)
        while len(c) > 1 and abs(c[-1]) <= rtol * scale:
            c.pop()
        return Polynomial(c)

    def __eq__(self, other):
        return isinstance(other, Polynomial) and self._c == other._c

    def __hash__(self):
        return hash(self._c)

    def __repr__(self):
        return f"Polynomial({list(self._c)})"


def _as_poly(v) -> Polynomial:
    if isinstance(v, Polynomial):
        return v
    if isinstance(v, (int, float)):
        return Polynomial((float(v),))
    return Polynomial(v)


# ---------------------------------------------------------------------------
# real roots of degree <= 4 polynomials


def _quadratic(c0: float, c1: float, c2: float) -> list:
    """Roots of c2 x^2 + c1 x + c0 as complex numbers (cancellation-free)."""
    disc = c1 * c1 - 4.0 * c2 * c0
    scale = max(c1 * c1, abs(4.0 * c2 * c0), 1e-300)
    if abs(disc) <= 1e-14 * scale:
        r = -c1 / (2.0 * c2)
        return [complex(r), complex(r)]
    if disc > 0:
        s = math.sqrt(disc)
        t = -0.5 * (c1 + math.copysign(s, c1))
        r1 = t / c2
        r2 = c0 / t if t != 0.0 else r1
        return [complex(r1), complex(r2)]
    s = math.sqrt(-disc)
    re = -c1 / (2.0 * c2)
    im = s / (2.0 * abs(c2))
    return [complex(re, im), complex(re, -im)]


def _cubic_monic(a: float, b: float, c: float) -> list:
    """Roots of x^3 + a x^2 + b x + c."""
    Q = (a * a - 3.0 * b) / 9.0
    R = (2.0 * a ** 3 - 9.0 * a * b + 27.0 * c) / 54.0
    shift = a / 3.0
    if Q == 0.0 and R == 0.0:
        return [complex(-shift)] * 3
    R2, Q3 = R * R, Q ** 3
    if R2 < Q3:
        theta = math.acos(max(-1.0, min(1.0, R / math.sqrt(Q3))))
        m = -2.0 * math.sqrt(Q)
        return [
            complex(m * math.cos(theta / 3.0) - shift),
            complex(m * math.cos((theta + 2.0 * math.pi) / 3.0) - shift),
            complex(m * math.cos((theta - 2.0 * math.pi) / 3.0) - shift),
        ]
    A = -math.copysign(1.0, R) * (abs(R) + math.sqrt(R2 - Q3)) ** (1.0 / 3.0)
    B = Q / A if A != 0.0 else 0.0
    re = -0.5 * (A + B) - shift
    im = 0.5 * math.sqrt(3.0) * (A - B)
    return [complex(A + B - shift), complex(re, im), complex(re, -im)]


def _quartic_monic(a: float, b: float, c: float, d: float) -> list:
    """Roots of x^4 + a x^3 + b x^2 + c x + d (Ferrari)."""
    shift = a / 4.0
    p = b - 3.0 * a * a / 8.0
    q = c - a * b / 2.0 + a ** 3 / 8.0
    r = d - a * c / 4.0 + a * a * b / 16.0 - 3.0 * a ** 4 / 256.0
    scale = max(abs(p), abs(q), abs(r), 1e-300)
    if abs(q) <= 1e-14 * scale:
        out = []
        for u in _quadratic(r, p, 1.0):
            s = np.sqrt(u)
            out.extend([complex(s) - shift, complex(-s) - shift])
        return out
    # resolvent 8m^3 + 8p m^2 + (2p^2 - 8r) m - q^2 = 0 has a positive root
    ms = _cubic_monic(p, (p * p / 4.0 - r), -q * q / 8.0)
    m = max(z.real for z in ms if abs(z.imag) <= 1e-9 * (1.0 + abs(z.real)))
    if m <= 0.0:
        m = max(z.real for z in ms)
    # polish the resolvent root, the factorisation is sensitive to it
    for _ in range(4):
        fm = ((m + p) * m + (p * p / 4.0 - r)) * m - q * q / 8.0
        dfm = (3.0 * m + 2.0 * p) * m + (p * p / 4.0 - r)
        if dfm == 0.0:
            break
        step = fm / dfm
        m -= step
        if abs(step) <= 1e-16 * abs(m):
            break
    s = math.sqrt(2.0 * m)
    out = []
    out += _quadratic(p / 2.0 + m - q / (2.0 * s), s, 1.0)
    out += _quadratic(p / 2.0 + m + q / (2.0 * s), -s, 1.0)
    return [z - shift for z in out]


def _polish(p: Polynomial, dp: Polynomial, x: float, iters: int = 8) -> float:
    # Newton may not leave a small neighbourhood of the closed-form value:
    # near a double root p' ~ 0 and a free step can land on a different root
    x_start = x
    radius = 1e-4 * (1.0 + abs(x))
    best, best_res = x, abs(p(x))
    for _ in range(iters):
        d = dp(x)
        if d == 0.0:
            break
        step = p(x) / d
        if abs(x - step - x_start) > radius:
            break
        x = x - step
        res = abs(p(x))
        if res < best_res:
            best, best_res = x, res
        if abs(step) <= 4e-16 * (1.0 + abs(x)):
            break
    return best


def real_roots(p: Polynomial, with_multiplicity: bool = False):
    """All real roots of a polynomial of degree <= 4, ascending.

    Closed forms give candidates which are then Newton-polished on the
    original polynomial.  Roots closer than ``1e-7 (1 + |r|)``, or with p
    between them at rounding level, are merged; with ``with_multiplicity`` the result is a list of ``(root, count)``.
    """
    if not isinstance(p, Polynomial):
        p = Polynomial(p)
    if p.is_zero():
        raise ZeroPolynomial("real_roots of the zero polynomial")
    p = p.trimmed()
    if p.degree > 4:
        raise ValueError(f"real_roots supports degree <= 4, got {p.degree}")
    c = p.coefficients
    # factor out exact zero roots first, they are common (x*(...) forms)
    zero_mult = 0
    while len(c) > 1 and c[0] == 0.0:
        c = c[1:]
        zero_mult += 1
    n = len(c) - 1
    lead = c[-1]
    m = [v / lead for v in c]
    if n == 0:
        cands = []
    elif n == 1:
        cands = [complex(-m[0])]
    elif n == 2:
        cands = _quadratic(m[0], m[1], 1.0)
    elif n == 3:
        cands = _cubic_monic(m[2], m[1], m[0])
    else:
        cands = _quartic_monic(m[3], m[2], m[1], m[0])

    dp = p.derivative()
    tol = 1e-9 * (1.0 + p.max_abs_coeff())
    found = [0.0] * zero_mult
    for z in cands:
        if abs(z.imag) > NEAR_REAL_RTOL * (1.0 + abs(z.real)):
            continue
        x = _polish(p, dp, z.real)
        res = abs(p(x))
        # far from the origin rounding in p(x) scales with sum |c_k| |x|^k
        mag = sum(abs(v) * abs(x) ** k for k, v in enumerate(p.coefficients))
        if res < tol or res <= 1e-10 * mag:
            found.append(x)
    found.sort()

    def noise_between(a: float, b: float) -> bool:
        # p at the midpoint is pure rounding: a split multiple root
        mid = 0.5 * (a + b)
        mag = sum(abs(v) * abs(mid) ** k for k, v in enumerate(p.coefficients))
        return abs(p(mid)) <= 64 * np.finfo(float).eps * mag

    merged: list = []
    for x in found:
        if merged and (abs(x - merged[-1][0]) <= ROOT_MERGE_RTOL * (1.0 + abs(x))
                       or noise_between(merged[-1][0], x)):
            r, k = merged[-1]
            merged[-1] = ((r * k + x) / (k + 1), k + 1)
        else:
            merged.append((x, 1))
    if with_multiplicity:
        return merged
    return [r for r, _ in merged]


# ---------------------------------------------------------------------------
# rational functions


class RationalFn:
    """numerator / denominator, with the real poles listed explicitly.

    When ``poles`` is omitted they are computed with :func:`real_roots`,
    which requires a denominator of degree <= 4.
    """

    __slots__ = ("numerator", "denominator", "poles", "den_power")

    def __init__(self, numerator, denominator=(1.0,), poles: Optional[Sequence[float]] = None):
        num = _as_poly(numerator)
        den = _as_poly(denominator)
        if den.is_zero():
            raise ZeroDivisionError("denominator is identically zero")
        if poles is None:
            poles = real_roots(den) if den.degree > 0 else []
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "denominator", den)
        object.__setattr__(self, "poles", tuple(sorted(float(r) for r in poles)))
        object.__setattr__(self, "den_power", _power_form(den, self.poles))

    def __setattr__(self, name, value):
        raise AttributeError("RationalFn is immutable")

    def __call__(self, x):
        return self.numerator(x) / self.eval_denominator(x)

    def eval_denominator(self, x):
        # lead (x - r)^k is evaluated factored: the expanded form cancels near r
        if self.den_power is not None:
            lead, r, k = self.den_power
            return lead * (x - r) ** k
        return self.denominator(x)

    def is_zero(self) -> bool:
        return self.numerator.is_zero()

    def derivative(self) -> "RationalFn":
        n, d = self.numerator, self.denominator
        num = n.derivative() * d - n * d.derivative()
        return _cancelled(num, d * d, self.poles)

    def __repr__(self):
        return f"RationalFn({list(self.numerator.coefficients)} / {list(self.denominator.coefficients)})"


def _power_form(den: Polynomial, poles: Sequence[float]):
    """(lead, r, k) when den equals lead * (x - r)^k, else None."""
    k = den.degree
    if k < 2 or len(set(poles)) != 1:
        return None
    r = poles[0]
    lead = den.coefficients[-1]
    expected = [lead * math.comb(k, j) * (-r) ** (k - j) for j in range(k + 1)]
    scale = max(abs(v) for v in expected)
    if all(abs(c - e) <= 1e-12 * scale for c, e in zip(den.coefficients, expected)):
        return (lead, r, k)
    return None


def _cancelled(num: Polynomial, den: Polynomial, poles: Sequence[float]) -> RationalFn:
    """Divide out common linear factors sitting at known poles."""
    keep = []
    for r in sorted(set(poles)):
        while den.degree > 0:
            nscale = sum(abs(v) * abs(r) ** k for k, v in enumerate(num.coefficients))
            if num.is_zero() or abs(num(r)) > 1e-10 * max(nscale, 1e-300):
                break
            dq, drem = den.divide_linear(r)
            dscale = sum(abs(v) * abs(r) ** k for k, v in enumerate(den.coefficients))
            if abs(drem) > 1e-10 * max(dscale, 1e-300):
                break
            num = num.divide_linear(r)[0]
            den = dq
        if den.degree > 0 and abs(den(r)) <= 1e-10 * max(
            sum(abs(v) * abs(r) ** k for k, v in enumerate(den.coefficients)), 1e-300
        ):
            keep.append(r)
    return RationalFn(num, den, poles=keep)


# ---------------------------------------------------------------------------
# weighted functions: core(x) * |offset + slope x|^exponent  or  core(x) * exp(rate x)


@dataclass(frozen=True)
class PowerWeight:
    base_offset: float
    base_slope: float
    exponent: float

    def __post_init__(self):
        if self.base_slope == 0.0:
            raise ValueError("PowerWeight needs a nonzero base_slope")

    @property
    def root(self) -> float:
        return -self.base_offset / self.base_slope

    def __call__(self, x):
        base = self.base_offset + self.base_slope * x
        if isinstance(base, float):
            return abs(base) ** self.exponent
        return np.abs(base) ** self.exponent


@dataclass(frozen=True)
class ExpWeight:
    rate: float

    def __call__(self, x):
        if isinstance(x, (float, int)):
            return math.exp(self.rate * x)
        return np.exp(self.rate * np.asarray(x, dtype=float))


Weight = Union[PowerWeight, ExpWeight, None]


class WeightedFn:
    """core(x) times a power or exponential weight (``weight=None`` means 1)."""

    __slots__ = ("core", "weight", "_num", "_den", "_dpoly", "_w")

    def __init__(self, core: RationalFn, weight: Weight = None):
        if not isinstance(core, RationalFn):
            core = RationalFn(core)
        object.__setattr__(self, "core", core)
        object.__setattr__(self, "weight", weight)
        # cached tuples for the scalar fast path
        object.__setattr__(self, "_num", tuple(reversed(core.numerator.coefficients)))
        dp = core.den_power
        object.__setattr__(self, "_den", dp if dp is not None else None)
        object.__setattr__(self, "_dpoly", tuple(reversed(core.denominator.coefficients)))
        object.__setattr__(self, "_w", _weight_params(weight))

    def __setattr__(self, name, value):
        raise AttributeError("WeightedFn is immutable")

    @classmethod
    def polynomial(cls, coeffs) -> "WeightedFn":
        return cls(RationalFn(coeffs))

    @property
    def poles(self) -> tuple:
        """Points excluded from the domain: core poles and the weight base zero."""
        pts = list(self.core.poles)
        if isinstance(self.weight, PowerWeight):
            pts.append(self.weight.root)
        return tuple(sorted(set(pts)))

    def __call__(self, x):
        if isinstance(x, (float, int)):
            return self.scalar(float(x))
        val = self.core(x)
        if self.weight is not None:
            val = val * self.weight(x)
        return val

    def scalar(self, x: float) -> float:
        n = 0.0
        for v in self._num:
            n = n * x + v
        den = self._den
        if den is not None:
            d = den[0] * (x - den[1]) ** den[2]
        else:
            d = 0.0
            for v in self._dpoly:
                d = d * x + v
        w = self._w
        if w is None:
            return n / d
        if w[0] == 0:
            return n / d * abs(w[1] + w[2] * x) ** w[3]
        return n / d * math.exp(w[1] * x)

    def is_zero(self) -> bool:
        return self.core.is_zero()

    def scaled(self, c: float) -> "WeightedFn":
        core = self.core
        return WeightedFn(RationalFn(core.numerator * float(c), core.denominator, poles=core.poles), self.weight)

    def derivative(self) -> "WeightedFn":
        core = self.core
        n, m = core.numerator, core.denominator
        dn = n.derivative() * m - n * m.derivative()
        w = self.weight
        if w is None:
            return WeightedFn(_cancelled(dn, m * m, core.poles), None)
        if isinstance(w, ExpWeight):
            num = dn + (n * m) * w.rate
            return WeightedFn(_cancelled(num, m * m, core.poles), w)
        base = Polynomial((w.base_offset, w.base_slope))
        num = dn * base + (n * m) * (w.exponent * w.base_slope)
        return WeightedFn(_cancelled(num, m * m * base, core.poles + (w.root,)), w)

    def __repr__(self):
        return f"WeightedFn({self.core!r}, {self.weight!r})"


def _weight_params(w: Weight):
    if w is None:
        return None
    if isinstance(w, PowerWeight):
        return (0, w.base_offset, w.base_slope, w.exponent)
    return (1, w.rate)


def weighted_derive(w: WeightedFn, order: int = 1) -> WeightedFn:
    """Symbolic derivative of ``core * weight`` of order 1 or 2."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    out = w.derivative()
    if order == 2:
        out = out.derivative()
    return out


# ---------------------------------------------------------------------------
# quadrature


def _check_pole_free(w: WeightedFn, lo: float, hi: float) -> None:
    a, b = min(lo, hi), max(lo, hi)
    for r in w.poles:
        if a <= r <= b:
            raise PoleInInterval(f"pole at {r!r} inside [{a!r}, {b!r}]")


def definite_integral(w, lo: float, hi: float) -> float:
    """Adaptive Gauss-Kronrod integral of ``w`` over [lo, hi].

    ``w`` may be a WeightedFn (its poles are checked) or any callable.
    """
    if lo == hi:
        return 0.0
    if isinstance(w, WeightedFn):
        _check_pole_free(w, lo, hi)
        fn = w.scalar
    else:
        fn = w
    with warnings.catch_warnings():
        # roundoff warnings fire on integrals that are exactly zero
        warnings.simplefilter("ignore", _spi.IntegrationWarning)
        val, _err = _spi.quad(fn, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=500)
    return float(val)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


def cumulative_integral(w, xs) -> np.ndarray:
    """``[∫_{xs[0]}^{xs[i]} w]`` for a sorted-or-reversed grid ``xs``.

    12-point Gauss-Legendre on every cell; the grid has to resolve ``w``.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        return xs.copy()
    lo, hi = xs[:-1], xs[1:]
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    pts = mid[:, None] + half[:, None] * _GL_X[None, :]
    vals = np.asarray(w(pts), dtype=float)
    cells = (vals * _GL_W[None, :]).sum(axis=1) * half
    return np.concatenate([[0.0], np.cumsum(cells)])

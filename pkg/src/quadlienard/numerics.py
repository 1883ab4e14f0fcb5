"""Trajectories, return maps on the section {x' = 0}, and limit-cycle search.

Both charts expose the same small protocol used here:

* ``rhs(x, y) -> (dx, dy)``
* ``section(x, y)``: x' itself; its zero set is the Poincaré section
  (y = 0 in the Liénard chart, the x-nullcline in the quadratic chart)
* ``section_point(x)``: the point of the section with abscissa x
* ``section_accel(x)``: x'' on the section, < 0 where x is at a local max
* ``pole``: abscissa of the singular / transversal line, or None

Because the Liénard reduction keeps x and maps the x-nullcline to y = 0,
a return map written in terms of x is the same function in both charts
(up to the direction of time on the side where beta1 + b1 x < 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import NoReturn, StepSizeUnderflow

__all__ = [
    "IntegrationOptions",
    "CycleSearchOptions",
    "Crossing",
    "Trajectory",
    "ReturnSample",
    "CycleNumeric",
    "integrate",
    "poincare_return",
    "displacement",
    "find_cycles",
    "cycle_orbit",
    "curve_distance",
    "return_time_fit",
    "EpsilonSweep",
    "epsilon_sweep",
]

# Dormand-Prince 5(4)
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0)
_A2 = (1 / 5,)
_A3 = (3 / 40, 9 / 40)
_A4 = (44 / 45, -56 / 15, 32 / 9)
_A5 = (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729)
_A6 = (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
_E = (-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40)
# continuous extension, rows = stages, columns = theta^1..theta^4
_P = (
    (1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799),
    (0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072),
    (0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632),
    (0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844),
    (0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423),
)


@dataclass(frozen=True)
class IntegrationOptions:
    rtol: float = 1e-10
    atol: float = 1e-12
    max_steps: int = 500_000
    max_step: float = math.inf
    first_step: Optional[float] = None
    pole_guard: float = 1e-6
    escape_radius: float = 1e6
    max_crossings: Optional[int] = None
    event_tol: float = 1e-12
    record: bool = True


@dataclass(frozen=True)
class Crossing:
    t: float
    state: tuple
    direction: int  # +1 when the section value goes from - to +


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    chart: str
    termination: str  # reached_tmax | hit_pole_guard | escaped | hit_section
    crossings: List[Crossing] = field(default_factory=list)
    t_eval: Optional[np.ndarray] = None
    y_eval: Optional[np.ndarray] = None
    n_steps: int = 0

    @property
    def final_state(self):
        return tuple(self.states[-1])


@dataclass(frozen=True)
class ReturnSample:
    x_start: float
    x_return: float
    T: float
    x_turn: float  # abscissa of the first (opposite) crossing


@dataclass
class CycleNumeric:
    section_x: float
    period: float
    amplitude: tuple  # (x_min, x_max)
    multiplier: float
    stability: str  # stable | unstable, in the chart's own time
    residual: float
    chart: str = "lienard"

    def encloses(self, x: float) -> bool:
        return self.amplitude[0] < x < self.amplitude[1]

    def to_dict(self) -> dict:
        return {
            "section_x": self.section_x, "period": self.period,
            "amplitude": list(self.amplitude), "multiplier": self.multiplier,
            "stability": self.stability, "residual": self.residual, "chart": self.chart,
        }


def _as_field(system):
    if hasattr(system, "rhs"):
        rhs = system.rhs
        return lambda s: rhs(s[0], s[1]), getattr(system, "section", None), getattr(system, "pole", None), getattr(system, "chart", "custom")
    if callable(system):
        return system, None, None, "custom"
    raise TypeError("system must expose rhs(x, y) or be a callable state -> derivative")


def integrate(system, state0: Sequence[float], t_span, options: IntegrationOptions = IntegrationOptions(),
              t_eval: Optional[Sequence[float]] = None, section: Optional[Callable] = None,
              extra: Optional[Callable] = None) -> Trajectory:
    """Adaptive Dormand-Prince 5(4) with dense output.

    ``system`` is a chart object (see module docstring) or a plain callable
    ``f(state) -> derivative`` of any dimension.  ``extra(state) -> tuple``
    appends components to the state (e.g. an accumulated time change), so
    the chart's 2-D field can be integrated together with quadratures.

    Section crossings are located by bisection on the dense output; with
    ``options.max_crossings`` the run halts at that crossing.  The run also
    halts within ``pole_guard`` of the pole line and beyond ``escape_radius``.
    """
    fun, sec, pole, chart = _as_field(system)
    if section is not None:
        sec = section
    if extra is not None:
        base = fun
        fun = lambda s: tuple(base(s)) + tuple(extra(s))  # noqa: E731
    opts = options
    t0, t1 = float(t_span[0]), float(t_span[1])
    direction = 1.0 if t1 >= t0 else -1.0
    y = [float(v) for v in state0]
    n = len(y)
    rng = range(n)
    rtol, atol = opts.rtol, opts.atol
    guard = opts.pole_guard
    R = opts.escape_radius

    if pole is not None and abs(y[0] - pole) < guard:
        raise ValueError("initial state inside the pole guard")

    times = [t0]
    states = [tuple(y)]
    crossings: List[Crossing] = []
    if t_eval is not None:
        t_eval = np.asarray(t_eval, dtype=float)
        if np.any(np.diff(t_eval) * direction < 0):
            raise ValueError("t_eval must be monotone in the integration direction")
        y_eval = np.full((len(t_eval), n), np.nan)
        ie = 0
        while ie < len(t_eval) and (t_eval[ie] - t0) * direction <= 0:
            if t_eval[ie] == t0:
                y_eval[ie] = y
            ie += 1
    else:
        y_eval = None
        ie = 0

    def sec_val(s):
        return sec(s[0], s[1]) if sec is not None else 0.0

    s_prev = sec_val(y)
    # a start exactly on the section is not a crossing
    sscale = 1e-12 * (1.0 + sum(abs(v) for v in y[:2]))
    on_section = abs(s_prev) <= sscale

    f0 = list(fun(y))
    if t1 == t0:
        return Trajectory(np.array(times), np.array(states), chart, "reached_tmax", crossings,
                          t_eval, y_eval, 0)

    # initial step (Hairer's heuristic)
    if opts.first_step is not None:
        h = abs(opts.first_step)
    else:
        sc = [atol + abs(v) * rtol for v in y]
        d0 = math.sqrt(sum((y[i] / sc[i]) ** 2 for i in rng) / n)
        d1 = math.sqrt(sum((f0[i] / sc[i]) ** 2 for i in rng) / n)
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        y1 = [y[i] + direction * h0 * f0[i] for i in rng]
        f1 = fun(y1)
        d2 = math.sqrt(sum(((f1[i] - f0[i]) / sc[i]) ** 2 for i in rng) / n) / h0
        if d1 <= 1e-15 and d2 <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** 0.2
        h = min(100 * h0, h1)
    h = min(h, abs(t1 - t0), opts.max_step)

    t = t0
    termination = "reached_tmax"
    steps = 0
    rejected = False
    while True:
        if steps >= opts.max_steps:
            raise StepSizeUnderflow(f"max_steps={opts.max_steps} exceeded at t={t}")
        hmin = 1e-14 * max(1.0, abs(t))
        if h < hmin:
            raise StepSizeUnderflow(f"step size {h:.3e} underflow at t={t}, state={y}")
        last = False
        if abs(t1 - t) <= h * 1.0000001:
            h = abs(t1 - t)
            last = True
        hs = direction * h
        k1 = f0
        k2 = fun([y[i] + hs * (_A2[0] * k1[i]) for i in rng])
        k3 = fun([y[i] + hs * (_A3[0] * k1[i] + _A3[1] * k2[i]) for i in rng])
        k4 = fun([y[i] + hs * (_A4[0] * k1[i] + _A4[1] * k2[i] + _A4[2] * k3[i]) for i in rng])
        k5 = fun([y[i] + hs * (_A5[0] * k1[i] + _A5[1] * k2[i] + _A5[2] * k3[i] + _A5[3] * k4[i]) for i in rng])
        k6 = fun([y[i] + hs * (_A6[0] * k1[i] + _A6[1] * k2[i] + _A6[2] * k3[i] + _A6[3] * k4[i]
                               + _A6[4] * k5[i]) for i in rng])
        ynew = [y[i] + hs * (_B[0] * k1[i] + _B[2] * k3[i] + _B[3] * k4[i] + _B[4] * k5[i] + _B[5] * k6[i])
                for i in rng]
        bad = not all(math.isfinite(v) for v in ynew)
        if not bad:
            k7 = fun(ynew)
            bad = not all(math.isfinite(v) for v in k7)
        if bad:
            h *= 0.2
            rejected = True
            steps += 1
            continue
        err = 0.0
        for i in rng:
            e = hs * (_E[0] * k1[i] + _E[2] * k3[i] + _E[3] * k4[i] + _E[4] * k5[i] + _E[5] * k6[i] + _E[6] * k7[i])
            sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            err += (e / sc) ** 2
        err = math.sqrt(err / n)
        steps += 1
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            rejected = True
            continue

        tnew = t1 if last else t + hs
        K = (k1, k2, k3, k4, k5, k6, k7)

        def dense(theta, _y=y, _K=K, _hs=hs):
            p1, p2, p3, p4 = theta, theta ** 2, theta ** 3, theta ** 4
            out = []
            for i in rng:
                acc = 0.0
                for j in (0, 2, 3, 4, 5, 6):
                    r = _P[j]
                    acc += _K[j][i] * (r[0] * p1 + r[1] * p2 + r[2] * p3 + r[3] * p4)
                out.append(_y[i] + _hs * acc)
            return out

        stop_theta = None
        # pole guard and escape, located on the dense output
        if pole is not None:
            dnew = ynew[0] - pole
            if abs(dnew) < guard or (dnew > 0) != (y[0] - pole > 0):
                sgn = 1.0 if y[0] > pole else -1.0
                lo, hi = 0.0, 1.0
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    if sgn * (dense(mid)[0] - pole) > guard:
                        lo = mid
                    else:
                        hi = mid
                stop_theta, termination = lo, "hit_pole_guard"
        if stop_theta is None and (abs(ynew[0]) > R or abs(ynew[1]) > R):
            stop_theta, termination = 1.0, "escaped"

        # section crossings inside this step
        if sec is not None:
            s_new = sec_val(ynew)
            if on_section:
                on_section = False
                s_prev = s_new
            elif (s_prev < 0.0 < s_new) or (s_prev > 0.0 > s_new) or (s_new == 0.0 and s_prev != 0.0):
                lo, hi = 0.0, 1.0
                sl = s_prev
                tol_theta = opts.event_tol / max(h, 1e-300)
                while hi - lo > tol_theta:
                    mid = 0.5 * (lo + hi)
                    if mid <= lo or mid >= hi:
                        break
                    sm = sec_val(dense(mid))
                    if (sm < 0.0) == (sl < 0.0) and sm != 0.0:
                        lo, sl = mid, sm
                    else:
                        hi = mid
                theta = 0.5 * (lo + hi)
                if stop_theta is None or theta <= stop_theta:
                    ys = dense(theta)
                    crossings.append(Crossing(t + theta * hs, tuple(ys), 1 if s_new > s_prev else -1))
                    if opts.max_crossings is not None and len(crossings) >= opts.max_crossings:
                        stop_theta, termination = theta, "hit_section"
                s_prev = s_new
            else:
                s_prev = s_new if s_new != 0.0 else s_prev

        if stop_theta is not None and stop_theta < 1.0:
            ynew = dense(stop_theta)
            tnew = t + stop_theta * hs
        if y_eval is not None:
            while ie < len(t_eval) and (t_eval[ie] - tnew) * direction <= 0:
                y_eval[ie] = dense((t_eval[ie] - t) / hs)
                ie += 1
        if opts.record:
            times.append(tnew)
            states.append(tuple(ynew))
        t, y = tnew, ynew
        if stop_theta is not None or last:
            break
        f0 = list(k7)
        fac = 10.0 if err == 0.0 else min(10.0, max(0.2, 0.9 * err ** -0.2))
        if rejected:
            fac = min(fac, 1.0)
            rejected = False
        h = min(h * fac, opts.max_step)

    if not opts.record:
        times.append(t)
        states.append(tuple(y))
    return Trajectory(np.array(times), np.array(states), chart, termination, crossings, t_eval, y_eval, steps)


# ---------------------------------------------------------------------------
# return map

RETURN_OPTIONS = IntegrationOptions(rtol=1e-11, atol=1e-13, max_steps=400_000, record=False, max_crossings=2)


def poincare_return(system, x_start: float, t_max: float = 1e6,
                    options: IntegrationOptions = RETURN_OPTIONS) -> ReturnSample:
    """Second crossing of the section by the orbit through section_point(x_start)."""
    opts = replace(options, max_crossings=2, record=False)
    p0 = system.section_point(x_start)
    try:
        tr = integrate(system, p0, (0.0, t_max), opts)
    except StepSizeUnderflow as exc:
        raise NoReturn(f"no return from x={x_start}: {exc}") from exc
    if len(tr.crossings) < 2:
        raise NoReturn(f"no return from x={x_start}: {tr.termination}")
    c1, c2 = tr.crossings
    return ReturnSample(x_start=x_start, x_return=c2.state[0], T=c2.t, x_turn=c1.state[0])


def displacement(system, x: float, **kw) -> float:
    r = poincare_return(system, x, **kw)
    return r.x_return - r.x_start


@dataclass(frozen=True)
class CycleSearchOptions:
    n_scan: int = 400
    xtol: float = 1e-10
    residual_tol: float = 1e-8
    t_max: float = 1e6
    near_equilibrium_levels: int = 10
    spacing: str = "linear"  # or "geometric": clustered towards the left end of the box
    integration: IntegrationOptions = RETURN_OPTIONS


def _section_sign_changes(system, lo: float, hi: float, n: int):
    """Abscissas in (lo, hi) where section_accel changes sign (equilibria)."""
    xs = np.linspace(lo, hi, max(n, 64) * 4 + 1)
    with np.errstate(all="ignore"):
        vals = np.array([system.section_accel(float(x)) for x in xs])
    out = []
    for i in range(len(xs) - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            out.append(float(xs[i]))
        elif a * b < 0:
            out.append(brentq(system.section_accel, float(xs[i]), float(xs[i + 1]), xtol=1e-14))
    return out


def find_cycles(system, search_box, options: CycleSearchOptions = CycleSearchOptions()) -> List[CycleNumeric]:
    """Fixed points of the return map on the section inside ``search_box``.

    Only section points where x'' < 0 are scanned: every closed orbit around
    a focus crosses the section there exactly once (at its largest x), so
    each cycle is found once.  The box is split at the pole line.
    """
    lo, hi = float(search_box[0]), float(search_box[1])
    guard = max(options.integration.pole_guard * 10, 1e-6 * (1 + abs(lo) + abs(hi)))
    pieces = [(lo, hi)]
    pole = getattr(system, "pole", None)
    if pole is not None and lo < pole < hi:
        pieces = [(lo, pole - guard), (pole + guard, hi)]
    elif pole is not None and abs(pole - hi) < guard:
        pieces = [(lo, pole - guard)]
    elif pole is not None and abs(pole - lo) < guard:
        pieces = [(pole + guard, hi)]

    kw = dict(t_max=options.t_max, options=options.integration)
    cycles: List[CycleNumeric] = []
    for a, b in pieces:
        if b <= a:
            continue
        eqs = _section_sign_changes(system, a, b, options.n_scan)
        if options.spacing == "geometric":
            grid = list(a + (b - a) * np.geomspace(1e-6, 1.0, options.n_scan))
        else:
            grid = list(np.linspace(a, b, options.n_scan))
        w = (b - a)
        for xe in eqs:
            for k in range(1, options.near_equilibrium_levels + 1):
                d = w * 2.0 ** (-k - 2)
                grid += [xe - d, xe + d]
        grid = sorted(set(float(x) for x in grid if a <= x <= b))
        cuts = sorted(eqs)

        disp = []
        for x in grid:
            if system.section_accel(x) >= 0.0:
                disp.append(math.nan)
                continue
            try:
                disp.append(displacement(system, x, **kw))
            except NoReturn:
                disp.append(math.nan)

        brackets = []
        for i in range(len(grid) - 1):
            x0, x1, d0, d1 = grid[i], grid[i + 1], disp[i], disp[i + 1]
            if math.isnan(d0) or math.isnan(d1):
                continue
            if any(x0 < c < x1 for c in cuts):
                continue
            if d0 == 0.0:
                brackets.append((x0, x0))
            elif d0 * d1 < 0:
                brackets.append((x0, x1))

        def fd(x):
            return displacement(system, x, **kw)

        for x0, x1 in brackets:
            try:
                xs = x0 if x0 == x1 else brentq(fd, x0, x1, xtol=options.xtol, rtol=1e-15, maxiter=200)
                cyc = _confirm(system, xs, options, kw)
            except NoReturn:
                continue
            if cyc is None:
                continue
            if any(abs(c.section_x - cyc.section_x) <= 1e-6 * (1 + abs(cyc.section_x)) for c in cycles):
                continue
            cycles.append(cyc)
    cycles.sort(key=lambda c: c.section_x)
    return cycles


def _confirm(system, xs: float, options: CycleSearchOptions, kw) -> Optional[CycleNumeric]:
    r = poincare_return(system, xs, **kw)
    res = r.x_return - xs
    if abs(res) >= options.residual_tol:
        return None
    hstep = 1e-5 * (1.0 + abs(xs))
    try:
        mult = (poincare_return(system, xs + hstep, **kw).x_return
                - poincare_return(system, xs - hstep, **kw).x_return) / (2 * hstep)
    except NoReturn:
        mult = math.nan
    return CycleNumeric(
        section_x=xs, period=r.T, amplitude=(min(r.x_turn, xs), max(r.x_turn, xs)),
        multiplier=mult, stability="stable" if abs(mult) < 1.0 else "unstable",
        residual=res, chart=getattr(system, "chart", "custom"),
    )


def cycle_orbit(system, cycle: CycleNumeric, n_points: int = 400,
                options: IntegrationOptions = IntegrationOptions(rtol=1e-11, atol=1e-13)) -> np.ndarray:
    """Sample one period of a found cycle at ``n_points`` equally spaced times."""
    ts = np.linspace(0.0, cycle.period, n_points)
    tr = integrate(system, system.section_point(cycle.section_x), (0.0, cycle.period),
                   replace(options, record=False, max_crossings=None), t_eval=ts)
    return tr.y_eval


def _point_to_polyline(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Distance from each point to a closed polyline (nearest vertex, then its two edges)."""
    from scipy.spatial import cKDTree

    n = len(poly)
    _, idx = cKDTree(poly).query(points)
    best = np.linalg.norm(points - poly[idx], axis=1)
    for shift in (-1, 0):
        i0 = (idx + shift) % n
        i1 = (i0 + 1) % n
        p0, p1 = poly[i0], poly[i1]
        seg = p1 - p0
        L2 = np.einsum("ij,ij->i", seg, seg)
        t = np.where(L2 > 0, np.einsum("ij,ij->i", points - p0, seg) / np.where(L2 > 0, L2, 1.0), 0.0)
        t = np.clip(t, 0.0, 1.0)
        proj = p0 + t[:, None] * seg
        best = np.minimum(best, np.linalg.norm(points - proj, axis=1))
    return best


def curve_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Hausdorff distance between two densely sampled closed curves."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(max(_point_to_polyline(a, b).max(), _point_to_polyline(b, a).max()))


def return_time_fit(lf, x0: float, offsets: Sequence[float], **kw):
    """(exponent, prefactor) of |T - 2 pi| ~ c z^k near the equilibrium x0.

    Time is rescaled by sqrt(g'(x0)) so the linearization has period 2 pi.
    """
    from .algebra import weighted_derive

    w = math.sqrt(weighted_derive(lf.g, 1).scalar(x0))
    z = np.asarray(offsets, dtype=float)
    dev = np.array([abs(poincare_return(lf, x0 + float(v), **kw).T * w - 2 * math.pi) for v in z])
    k, logc = np.polyfit(np.log(z), np.log(dev), 1)
    return float(k), float(math.exp(logc))


@dataclass
class EpsilonSweep:
    largest: Optional[float]  # largest |eps| with a certificate and a cycle around x_eps; None if none
    rows: List[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"largest": self.largest, "rows": self.rows}


def epsilon_sweep(build, x0: float, sign: float, radius: float, n_eps: int = 13,
                  options: CycleSearchOptions = CycleSearchOptions(n_scan=80, spacing="geometric")) -> EpsilonSweep:
    """Sweep eps = sign * logspace(-4, -1, n_eps) and look for the certified small cycle.

    ``build`` maps eps to a LienardForm.  At each eps the small-cycle certificate
    at x0 is requested and, when issued, cycles are searched on the section
    in (x_eps, x_eps + radius).
    """
    from .analysis import LienardFamily, theorem1_certify

    rows, largest = [], None
    for e in math.copysign(1.0, sign) * np.logspace(-4.0, -1.0, n_eps):
        e = float(e)
        row = {"epsilon": e, "certificate": None, "x_eps": None, "cycle_x": None}
        cert = theorem1_certify(LienardFamily(build, e), x0)
        if cert is not None:
            xe = cert.witnesses["x_eps"]
            row.update(certificate=cert.orientation, x_eps=xe)
            hits = [c for c in find_cycles(build(e), (xe, xe + radius), options) if c.encloses(xe)]
            if hits:
                row["cycle_x"] = min(c.section_x for c in hits)
                largest = abs(e)
        rows.append(row)
    return EpsilonSweep(largest, rows)

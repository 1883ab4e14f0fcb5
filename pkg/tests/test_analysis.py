from dataclasses import replace

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from conftest import ATTRACTOR, two_foci
from quadlienard.algebra import definite_integral
from quadlienard.analysis import (
    LienardFamily,
    abcd_criterion,
    classify,
    conditions21_check,
    drift_slope,
    find_equilibria,
    lyapunov_quantity,
    mirror,
    reverse_time,
    theorem1_certify,
    theorem5_certify,
    track_equilibrium,
)
from quadlienard.errors import NonIsolatedEquilibrium, NotAnEquilibrium, PreconditionError
from quadlienard.numerics import CycleSearchOptions, find_cycles, poincare_return
from quadlienard.reduction import LienardForm, QuadraticSystem, to_lienard

HARMONIC = LienardForm.from_functions((0.0,), (0.0, 1.0))


def small_cycle_family(f1, f2, g2, g3=0.0):
    """x'' + (eps + f1 x + f2 x^2) x' + x + g2 x^2 + g3 x^3 = 0."""
    return lambda e: LienardForm.from_functions((e, f1, f2), (0.0, 1.0, g2, g3))


# -- equilibria --------------------------------------------------------------


def test_harmonic_single_center_candidate():
    (e,) = find_equilibria(HARMONIC)
    assert e.location == (0.0, 0.0)
    assert e.classification == "center-candidate"


def test_two_foci_equilibria_and_slopes():
    eqs = find_equilibria(to_lienard(two_foci()))
    assert [e.location[0] for e in eqs] == pytest.approx([-2.0, 0.0], abs=1e-12)
    for e in eqs:
        assert e.jet["g1"] == pytest.approx(2 / 9, abs=1e-12)
        assert e.kind == "center-candidate"


def test_g_identically_zero():
    with pytest.raises(NonIsolatedEquilibrium):
        find_equilibria(LienardForm.from_functions((1.0,), (0.0,)))


@pytest.mark.parametrize("jac, expected", [
    ([[0, 1], [-1, -0.1]], ("focus", "stable")),
    ([[0, 1], [-1, 0.1]], ("focus", "unstable")),
    ([[0, 1], [-1, -3.0]], ("node", "stable")),
    ([[0, 1], [1, 0.0]], ("saddle", "unstable")),
    ([[0, 1], [-1, 0.0]], ("center-candidate", None)),
    ([[0, 1], [0, 0.0]], ("degenerate", None)),
])
def test_classify(jac, expected):
    assert classify(jac) == expected


def test_classification_matches_trace_and_determinant():
    rng = np.random.default_rng(4)
    for _ in range(300):
        s = QuadraticSystem(*rng.uniform(-1, 1, 10))
        for e in find_equilibria(s):
            assert max(map(abs, s.rhs(*e.location))) < 1e-9 * (1 + max(map(abs, e.location))) ** 2
            if e.kind in ("focus", "node"):
                assert (e.trace < 0) == (e.stability == "stable") and e.det > 0
                assert (e.discriminant < 0) == (e.kind == "focus")
            elif e.kind == "saddle":
                assert e.det < 0


@given(eps=st.floats(-0.05, 0.05), which=st.sampled_from([0, 1]))
def test_jets_match_finite_differences(eps, which):
    lf = to_lienard(two_foci(eps))
    eqs = find_equilibria(lf)
    assume(len(eqs) == 2)
    e = eqs[which]
    x0, h = e.x0, 1e-4
    for name, fn in (("f", lf.f.scalar), ("g", lf.g.scalar)):
        d1 = (fn(x0 + h) - fn(x0 - h)) / (2 * h)
        d2 = (fn(x0 + h) - 2 * fn(x0) + fn(x0 - h)) / h ** 2 / 2
        assert e.jet[name + "1"] == pytest.approx(d1, rel=1e-6, abs=1e-8)
        assert e.jet[name + "2"] == pytest.approx(d2, rel=1e-6, abs=1e-6)


# -- Lyapunov quantity -------------------------------------------------------


def test_lyapunov_two_foci_origin():
    assert lyapunov_quantity(to_lienard(two_foci()), 0.0) == pytest.approx(16 / 9, abs=1e-12)


def test_lyapunov_zero_damping():
    assert lyapunov_quantity(HARMONIC, 0.0) == 0.0


def test_lyapunov_needs_equilibrium():
    with pytest.raises(NotAnEquilibrium):
        lyapunov_quantity(HARMONIC, 0.3)


def _energy(lf, x):
    # V(x, 0) = (int_0^x f)^2 + 2 int_0^x g
    return definite_integral(lf.f, 0.0, x) ** 2 + 2 * definite_integral(lf.g, 0.0, x)


def test_lyapunov_sign_matches_return_map_and_energy():
    rng = np.random.default_rng(1)
    seen = 0
    while seen < 12:
        f1, f2, g2 = rng.uniform(-1, 1, 3)
        if abs(f2 - f1 * g2) < 0.2:
            continue
        lf = small_cycle_family(f1, f2, g2)(0.0)
        L = lyapunov_quantity(lf, 0.0)
        assert L == pytest.approx(2 * (f2 - f1 * g2), rel=1e-12)
        r = poincare_return(lf, 0.05)
        dV = _energy(lf, r.x_return) - _energy(lf, r.x_start)
        assert np.sign(r.x_return - r.x_start) == -np.sign(L)
        assert np.sign(dV) == -np.sign(L)
        seen += 1


# -- small-cycle certificate -------------------------------------------------


def test_small_cycle_certificate_direct_and_confirmed():
    build = small_cycle_family(0.5, -1.0, 0.3)
    cert = theorem1_certify(LienardFamily(build, 0.01), 0.0)
    assert cert is not None and cert.orientation == "direct" and cert.verify()
    assert cert.witnesses["L"] == pytest.approx(-2.3)
    cycles = find_cycles(build(0.01), (0.0, 0.8), CycleSearchOptions(n_scan=60))
    assert len(cycles) == 1 and cycles[0].encloses(0.0)
    assert abs(cycles[0].residual) < 1e-8


def test_small_cycle_certificate_wrong_sign_of_eps():
    assert theorem1_certify(LienardFamily(small_cycle_family(0.5, -1.0, 0.3), -0.01), 0.0) is None


def test_zero_lyapunov_gives_no_certificate():
    assert theorem1_certify(LienardFamily(small_cycle_family(0.0, 0.0, 0.0), 0.01), 0.0) is None


@pytest.mark.parametrize("x0", [0.0, -2.0])
def test_two_foci_certificates_are_mirrored(x0):
    cert = theorem1_certify(LienardFamily.from_systems(two_foci, -0.02), x0)
    assert cert.orientation == "mirrored" and cert.verify()
    assert cert.witnesses["L"] == pytest.approx(16 / 9, abs=1e-10)


def test_two_foci_origin_keeps_equilibrium():
    cert = theorem1_certify(LienardFamily.from_systems(two_foci, -0.02), 0.0)
    assert cert.witnesses["x_eps"] == 0.0
    assert cert.witnesses["F"] == pytest.approx(-0.02, abs=1e-15)


@pytest.mark.parametrize("coeffs, eps", [((0.5, -1.0, 0.3), 0.01), ((-0.4, 0.8, 0.5), -0.02), ((1.0, 0.2, 0.9), -0.01)])
def test_certificate_swaps_orientation_under_time_reversal(coeffs, eps):
    fam = LienardFamily(small_cycle_family(*coeffs), eps)
    fwd, back = theorem1_certify(fam, 0.0), theorem1_certify(fam.reversed(), 0.0)
    assert (fwd is None) == (back is None)
    if fwd is not None:
        assert {fwd.orientation, back.orientation} == {"direct", "mirrored"}
        assert back.witnesses["L"] == pytest.approx(-fwd.witnesses["L"])
        assert back.witnesses["F"] == pytest.approx(-fwd.witnesses["F"])


def test_reverse_time_negates_damping():
    lf = to_lienard(two_foci(0.01))
    rev = reverse_time(lf)
    for x in (-3.0, -0.5, 0.7):
        assert rev.f.scalar(x) == -lf.f.scalar(x)
        assert rev.g.scalar(x) == lf.g.scalar(x)


# -- equilibrium drift -------------------------------------------------------


def test_track_equilibrium_at_zero_eps_is_identity():
    fam = LienardFamily.from_systems(two_foci, 0.0)
    assert track_equilibrium(fam, -2.0) == pytest.approx(-2.0, abs=1e-14)


def test_drift_slope_near_minus_two():
    fam = LienardFamily.from_systems(two_foci, 0.0)
    e = np.geomspace(1e-3, 1e-2, 10)
    assert drift_slope(fam, -2.0, np.concatenate([-e[::-1], e])) == pytest.approx(-3.0, abs=0.1)


def test_mirror_about_pole():
    lf = to_lienard(two_foci())
    m = mirror(lf, -1.0)
    for x in (-0.5, 0.3, 2.0):
        assert m.f.scalar(x) == pytest.approx(lf.f.scalar(-2.0 - x), rel=1e-13)
        assert m.g.scalar(x) == pytest.approx(-lf.g.scalar(-2.0 - x), rel=1e-13)
    (e0,) = [e for e in find_equilibria(m) if abs(e.location[0]) < 1e-12]
    assert (2 * e0.jet["f2"], 2 * e0.jet["g2"]) == pytest.approx((-10.0, -2.0), abs=1e-9)
    assert (e0.jet["f1"], e0.jet["g1"]) == pytest.approx((2.0, 2 / 9), abs=1e-9)


# -- A/B/C/D criterion -------------------------------------------------------


def test_focus_criterion_two_foci_values():
    crit, cert = abcd_criterion(two_foci())
    assert (crit.A, crit.B, crit.C, crit.D) == pytest.approx((1.0, 2.0, 1 / 9, 2 / 9), abs=1e-15)
    assert crit.expression == pytest.approx(8 / 9, abs=1e-15)
    assert cert.orientation == "mirrored" and cert.verify()


def test_focus_criterion_needs_negative_eps_in_family():
    assert abcd_criterion(two_foci(-0.02))[1] is not None
    assert abcd_criterion(two_foci(0.02))[1] is None


def test_focus_criterion_no_certificate_when_d_nonpositive():
    s = replace(two_foci(), alpha2=1.0)
    crit, cert = abcd_criterion(s)
    assert crit.D <= 0 and cert is None


def test_focus_criterion_precondition():
    with pytest.raises(PreconditionError):
        abcd_criterion(replace(two_foci(), b1=2.0))


def test_focus_criterion_cross_identity_random():
    rng = np.random.default_rng(17)
    n = 0
    while n < 200:
        a1, al1, a2, b2, c2, al2 = rng.uniform(-2, 2, 6)
        s = QuadraticSystem(a1=a1, b1=1.0, c1=0.0, alpha1=al1, beta1=1.0, a2=a2, b2=b2, c2=c2,
                            alpha2=al2, beta2=-al1)
        crit, _ = abcd_criterion(s)
        lf = to_lienard(s)
        g1 = find_equilibria(lf)
        (e0,) = [e for e in g1 if abs(e.location[0]) < 1e-12]
        assert crit.D == pytest.approx(e0.jet["g1"], abs=1e-8)
        assert crit.expression == pytest.approx(lyapunov_quantity(lf, 0.0) / 2, abs=1e-8, rel=1e-8)
        n += 1


# -- attractor conditions ----------------------------------------------------


def test_conditions_attractor_margins():
    rep = conditions21_check(ATTRACTOR)
    assert rep.passed and not rep.violated()
    assert rep.margins == pytest.approx((0.5, 1.0, 1.0, 1.0, 1.0), abs=1e-15)


def test_conditions_fail_for_zero_c2():
    rep = conditions21_check(replace(ATTRACTOR, c2=0.0))
    assert not rep
    assert rep.violated() == ["0 < 2 c2 < b1"]


@given(b1=st.floats(1.0, 2.0), c2f=st.floats(0.01, 0.99), beta1=st.floats(0.5, 2.0),
       al1=st.floats(-3.0, -0.01), b2=st.floats(-3.0, -0.01), a2=st.floats(-3.0, -0.01),
       al2=st.floats(-5.0, 5.0), be2=st.floats(-5.0, 5.0))
def test_conditions_hold_on_box(b1, c2f, beta1, al1, b2, a2, al2, be2):
    s = QuadraticSystem(a1=0.0, b1=b1, c1=0.0, alpha1=al1, beta1=beta1, a2=a2, b2=b2, c2=c2f * b1 / 2,
                        alpha2=al2, beta2=be2)
    assert conditions21_check(s).passed


def test_attractor_certificate():
    cert = theorem5_certify(ATTRACTOR)
    assert cert is not None and cert.verify()
    assert cert.region == {"type": "half-plane", "x_gt": -1.0}
    assert (cert.witnesses["eq_x"], cert.witnesses["eq_y"]) == (0.0, 0.0)


def test_attractor_stable_focus_variant_not_certified():
    # trace at the origin is alpha1 + beta2; beta2 = 0.5 makes it negative
    s = replace(ATTRACTOR, beta2=0.5)
    assert conditions21_check(s).passed
    (e,) = [e for e in find_equilibria(s) if e.location[0] > -1]
    assert e.classification == "stable focus"
    assert theorem5_certify(s) is None


def test_attractor_two_equilibria_not_certified():
    s = replace(ATTRACTOR, alpha2=3.0, beta2=4.0)
    assert conditions21_check(s).passed
    assert len([e for e in find_equilibria(s) if e.location[0] > -1]) >= 2
    assert theorem5_certify(s) is None


def test_certificate_verify_detects_tampering():
    cert = theorem5_certify(ATTRACTOR)
    cert.witnesses["trace"] = -1.0
    assert not cert.verify()

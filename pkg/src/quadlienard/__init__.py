"""Limit cycles of planar quadratic systems through their Lienard reduction."""

__version__ = "0.1.0"

from .algebra import Polynomial, RationalFn, WeightedFn, real_roots  # noqa: E402
from .analysis import (  # noqa: E402
    CycleCertificate,
    EquilibriumReport,
    LienardFamily,
    abcd_criterion,
    conditions21_check,
    find_equilibria,
    lyapunov_quantity,
    theorem1_certify,
    theorem5_certify,
    track_equilibrium,
)
from .errors import *  # noqa: E402,F401,F403
from .numerics import CycleNumeric, IntegrationOptions, find_cycles, integrate, poincare_return  # noqa: E402
from .reduction import LienardForm, QuadraticSystem, TransformRecord, eliminate_c1, to_lienard  # noqa: E402
from .transversal import TransversalCurve, build_transversal  # noqa: E402

__all__ = [
    "Polynomial", "RationalFn", "WeightedFn", "real_roots",
    "QuadraticSystem", "TransformRecord", "LienardForm", "eliminate_c1", "to_lienard",
    "EquilibriumReport", "find_equilibria", "lyapunov_quantity", "LienardFamily", "track_equilibrium",
    "CycleCertificate", "theorem1_certify", "abcd_criterion", "conditions21_check", "theorem5_certify",
    "IntegrationOptions", "integrate", "poincare_return", "CycleNumeric", "find_cycles",
    "TransversalCurve", "build_transversal",
]

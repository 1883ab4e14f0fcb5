"""Random sampling of quadratic systems: certificate rate and numeric confirmation."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from .analysis import find_equilibria, theorem5_certify
from .errors import QuadLienardError
from .numerics import CycleSearchOptions, RETURN_OPTIONS, find_cycles
from .reduction import QuadraticSystem

__all__ = ["RunConfig", "SampleRecord", "SampleReport", "draw_systems", "run_sample", "THEOREM5_BOX"]

# attractor box: a1 = 0 specialization of the five attractor inequalities, narrowed so every
# draw has one unstable focus to the right of the pole line (see notes)
THEOREM5_BOX = {
    "b1": (1.0, 2.0),
    "c2_frac": (0.05, 0.45),  # c2 / b1
    "beta1": (0.5, 2.0),
    "alpha1": (-1.5, -0.5),
    "b2": (-1.5, -0.5),
    "a2": (-1.5, -0.5),
    "beta2_excess": (0.2, 2.0),  # beta2 - |alpha1|
    "alpha2": (-1000.0, -200.0),
}


@dataclass(frozen=True)
class RunConfig:
    region: str = "theorem5"  # theorem5 | uniform
    n: int = 200
    seed: int = 0
    rtol: float = 1e-10  # integration
    atol: float = 1e-12
    root_tol: float = 1e-10  # cycle refinement
    n_scan: int = 48
    search_span: float = 1e3  # cycles are searched on (x_eq, x_eq + span)
    confirm: str = "certified"  # certified | all | none
    workers: int = 1
    output_dir: Optional[str] = None

    def __post_init__(self):
        for name in ("rtol", "atol", "root_tol", "search_span"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.region not in ("theorem5", "uniform"):
            raise ValueError(f"unknown region {self.region!r}")
        if self.confirm not in ("certified", "all", "none"):
            raise ValueError(f"unknown confirm mode {self.confirm!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.n < 0:
            raise ValueError("n must be >= 0")

    def search_options(self) -> CycleSearchOptions:
        integ = replace(RETURN_OPTIONS, rtol=self.rtol, atol=self.atol)
        return CycleSearchOptions(n_scan=self.n_scan, xtol=self.root_tol, spacing="geometric",
                                  near_equilibrium_levels=0, integration=integ)


@dataclass
class SampleRecord:
    index: int
    coefficients: dict
    certificate: Optional[str]
    n_cycles: Optional[int]  # None when not searched
    cycles: list = field(default_factory=list)
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {"index": self.index, "coefficients": self.coefficients, "certificate": self.certificate,
                "n_cycles": self.n_cycles, "cycles": self.cycles, "error": self.error}


@dataclass
class SampleReport:
    region: str
    seed: int
    n_total: int
    n_certified: int
    n_cycles_found: int  # samples with at least one numerically confirmed cycle
    records: List[SampleRecord]

    def to_dict(self) -> dict:
        return {"region": self.region, "seed": self.seed, "n_total": self.n_total,
                "n_certified": self.n_certified, "n_cycles_found": self.n_cycles_found,
                "records": [r.to_dict() for r in self.records]}


def draw_systems(region: str, n: int, seed: int) -> List[QuadraticSystem]:
    """All coefficients are drawn up front, so results do not depend on scheduling."""
    rng = np.random.default_rng(seed)
    if region == "uniform":
        vals = rng.uniform(-1.0, 1.0, size=(n, 10))
        return [QuadraticSystem(*map(float, row)) for row in vals]
    box = THEOREM5_BOX
    keys = list(box)
    u = rng.uniform(size=(n, len(keys)))
    out = []
    for row in u:
        v = {k: box[k][0] + (box[k][1] - box[k][0]) * float(t) for k, t in zip(keys, row)}
        out.append(QuadraticSystem(
            a1=0.0, b1=v["b1"], c1=0.0, alpha1=v["alpha1"], beta1=v["beta1"],
            a2=v["a2"], b2=v["b2"], c2=v["c2_frac"] * v["b1"], alpha2=v["alpha2"],
            beta2=abs(v["alpha1"]) + v["beta2_excess"],
        ))
    return out


def _cycle_search(s: QuadraticSystem, cfg: RunConfig):
    """Cycles to the right of the rightmost equilibrium lying right of the pole line."""
    a = s.pole
    eqs = [e for e in find_equilibria(s) if a is None or e.location[0] > a]
    if not eqs:
        return []
    x_eq = max(e.location[0] for e in eqs)
    return find_cycles(s, (x_eq, x_eq + cfg.search_span), cfg.search_options())


def _one(index: int, s: QuadraticSystem, cfg: RunConfig) -> SampleRecord:
    rec = SampleRecord(index, s.to_dict(), None, None)
    try:
        cert = theorem5_certify(s)
        rec.certificate = cert.kind if cert is not None else None
        if cfg.confirm == "all" or (cfg.confirm == "certified" and cert is not None):
            cycles = _cycle_search(s, cfg)
            rec.n_cycles = len(cycles)
            rec.cycles = [c.to_dict() for c in cycles]
    except QuadLienardError as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
    return rec


def run_sample(cfg: RunConfig) -> SampleReport:
    systems = draw_systems(cfg.region, cfg.n, cfg.seed)
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(lambda p: _one(p[0], p[1], cfg), enumerate(systems)))
    else:
        records = [_one(i, s, cfg) for i, s in enumerate(systems)]
    records.sort(key=lambda r: r.index)
    return SampleReport(
        region=cfg.region, seed=cfg.seed, n_total=len(records),
        n_certified=sum(r.certificate is not None for r in records),
        n_cycles_found=sum(bool(r.n_cycles) for r in records),
        records=records,
    )

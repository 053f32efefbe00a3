"""Prices, contracts and competitive-equilibrium certification.

The commodity price is the clearing multiplier ``p0`` and each bidder's
commitment price is its multiplier ``p_k``. A bidder paid
``p0*a_k*x_k + p_k*z_k`` has no profitable deviation from its assigned
``(x_k, z_k)``; :func:`verify_equilibrium` checks this by solving every
bidder's own problem at the posted prices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dispatch import TOL_EQ, DispatchSolution, DualCertificate
from .model import BidderSpec, MarketInstance, feasible_interval

__all__ = [
    "PriceSystem",
    "Contract",
    "IndividualSolution",
    "BidderCheck",
    "EquilibriumReport",
    "GapReport",
    "solve_individual",
    "bidder_value",
    "build_contracts",
    "check_strong_duality",
    "verify_equilibrium",
    "certify",
]

GAP_TOL = 1e-8


@dataclass(frozen=True)
class PriceSystem:
    t0: float
    t: tuple[float, ...]

    @classmethod
    def from_certificate(cls, cert: DualCertificate) -> "PriceSystem":
        return cls(float(cert.p0), tuple(float(v) for v in cert.p))


@dataclass(frozen=True)
class Contract:
    bidder: str
    z_committed: int
    x_committed: float
    payment: float


@dataclass(frozen=True)
class IndividualSolution:
    x: float
    y: float
    z: int
    value: float


@dataclass
class BidderCheck:
    bidder: str
    achieved: float
    optimum: float
    best_z: int
    best_x: float

    @property
    def uplift(self) -> float:
        return self.achieved - self.optimum


@dataclass
class EquilibriumReport:
    bidders: list[BidderCheck] = field(default_factory=list)
    clearing_residual: float = 0.0
    market_clears: bool = True
    tol: float = GAP_TOL

    @property
    def uplifts(self) -> np.ndarray:
        return np.array([b.uplift for b in self.bidders])

    @property
    def max_uplift(self) -> float:
        return max((b.uplift for b in self.bidders), default=0.0)

    @property
    def passed(self) -> bool:
        return self.market_clears and self.max_uplift <= self.tol


@dataclass
class GapReport:
    primal: float
    dual: float
    linear_mode: bool = False
    tol: float = GAP_TOL

    @property
    def gap(self) -> float:
        return abs(self.primal - self.dual) / (1.0 + abs(self.primal))

    @property
    def passed(self) -> bool:
        return self.gap <= self.tol

    @property
    def severity(self) -> str:
        if self.passed:
            return "ok"
        return "warning" if self.linear_mode else "error"


def bidder_value(bd: BidderSpec, x: float, z: int, t0: float, tk: float) -> float:
    """Cost net of payment: ``c*x + d*z + r*(x-x0)^2 - t0*a*x - tk*z``."""
    return bd.c * x + bd.d * z + bd.r * (x - bd.x0) ** 2 - t0 * bd.a * x - tk * z


def _best_output(bd: BidderSpec, z: int, t0: float) -> float | None:
    iv = feasible_interval(bd, z)
    if iv is None:
        return None
    if bd.r > 0:
        return iv.clamp(bd.x0 + (bd.a * t0 - bd.c) / (2.0 * bd.r))
    return iv.hi if bd.a * t0 > bd.c else iv.lo


def solve_individual(bidder: BidderSpec, t0: float, tk: float, prefer_z: int | None = None,
                     tol: float = 1e-12) -> IndividualSolution:
    """Bidder's own profit-maximising choice at prices ``(t0, tk)``.

    Both commitment values are tried. Ties within ``tol`` go to ``prefer_z``
    when given, otherwise to ``z = 0``.
    """
    options = []
    for z in (0, 1):
        x = _best_output(bidder, z, t0)
        if x is None:
            continue
        value = -math.inf if math.isinf(x) else bidder_value(bidder, x, z, t0, tk)
        options.append((value, z, x))
    if not options:
        raise ValueError(f"{bidder.id}: no feasible output for either commitment")
    lowest = min(v for v, _, _ in options)
    band = tol * max(1.0, abs(lowest)) if math.isfinite(lowest) else 0.0
    near = [o for o in options if o[0] <= lowest + band]
    want = 0 if prefer_z is None else prefer_z
    value, z, x = next((o for o in near if o[1] == want), near[0])
    return IndividualSolution(x=x, y=(x - bidder.x0) ** 2, z=z, value=value)


def build_contracts(inst: MarketInstance, z: Sequence[int], x: Sequence[float],
                    cert: DualCertificate) -> list[Contract]:
    return [
        Contract(bd.id, int(zk), float(xk), cert.p0 * bd.a * float(xk) + float(pk) * int(zk))
        for bd, zk, xk, pk in zip(inst.bidders, z, x, cert.p)
    ]


def check_strong_duality(primal_obj: float, cert: DualCertificate, linear_mode: bool = False,
                         tol: float = GAP_TOL) -> GapReport:
    return GapReport(float(primal_obj), float(cert.dual_objective), linear_mode, tol)


def verify_equilibrium(inst: MarketInstance, z: Sequence[int], x: Sequence[float],
                       prices: PriceSystem | DualCertificate, tol: float = GAP_TOL,
                       tol_eq: float = TOL_EQ) -> EquilibriumReport:
    """Certify that ``(z, x)`` is a competitive equilibrium at ``prices``.

    Every bidder's achieved value is compared against the optimum of its own
    problem; the difference is its uplift. The report passes when all uplifts
    are within ``tol`` and the allocation clears the market.
    """
    if isinstance(prices, DualCertificate):
        prices = PriceSystem.from_certificate(prices)
    t0 = prices.t0
    checks = []
    for bd, zk, xk, tk in zip(inst.bidders, z, x, prices.t):
        zk, xk = int(zk), float(xk)
        best = solve_individual(bd, t0, tk, prefer_z=zk)
        checks.append(BidderCheck(bd.id, bidder_value(bd, xk, zk, t0, tk), best.value, best.z, best.x))
    residual = math.fsum(bd.a * float(xk) for bd, xk in zip(inst.bidders, x)) - inst.b0
    clears = abs(residual) <= tol_eq * max(1.0, abs(inst.b0))
    return EquilibriumReport(checks, residual, clears, tol)


def certify(inst: MarketInstance, sol: DispatchSolution, cert: DualCertificate,
            tol: float = GAP_TOL) -> EquilibriumReport:
    """Shorthand for :func:`verify_equilibrium` on a solved dispatch."""
    return verify_equilibrium(inst, sol.z, sol.x, cert, tol)

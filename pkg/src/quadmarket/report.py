"""Self-contained run reports and their offline re-verification.

A report embeds the instance, the primal solution, every multiplier and the
outcome of each certificate check. :func:`verify_report` recomputes those
checks from the stored numbers alone, without solving anything. Reals are
written with Python's shortest round-trip ``repr`` so a report reloads
bit-for-bit.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .dispatch import TOL_EQ, TOL_KKT, TOL_P, DispatchSolution, DualCertificate, kkt_residuals, recover_duals
from .model import MarketInstance, instance_digest, instance_from_dict, instance_to_dict, objective_value
from .pricing import GAP_TOL, build_contracts, check_strong_duality, verify_equilibrium
from .search import SearchOptions, solve

__all__ = [
    "REPORT_FORMAT",
    "RunReport",
    "VerifyOutcome",
    "run",
    "dual_objective",
    "verify_report",
    "dump_report",
    "load_report",
]

REPORT_FORMAT = "quadmarket.run/1"


@dataclass
class RunReport:
    data: dict

    @property
    def certified(self) -> bool:
        return bool(self.data["certified"])

    @property
    def linear_mode(self) -> bool:
        return bool(self.data["linear_mode"])

    @property
    def objective(self) -> float:
        return float(self.data["objective"])

    @property
    def p0(self) -> float:
        return float(self.data["p0"])

    def failing(self) -> list[str]:
        return list(self.data["failing"])

    def to_json(self) -> str:
        return dump_report(self.data)


def dual_objective(inst: MarketInstance, z, cert: DualCertificate) -> float:
    """Dual objective recomputed from stored multipliers."""
    terms = [inst.b0 * cert.p0]
    for k, bd in enumerate(inst.bidders):
        terms.extend((bd.b * cert.q[k], int(z[k]) * cert.p[k], -cert.gamma[k],
                      cert.alpha[k], 2.0 * cert.beta[k] * bd.x0))
    return math.fsum(float(t) for t in terms)


def _checks(inst, z, sol, cert, tol_kkt, tol_eq):
    kkt = kkt_residuals(inst, z, sol, cert, tol_kkt)
    gap = check_strong_duality(sol.objective, cert, inst.linear_mode, GAP_TOL)
    eq = verify_equilibrium(inst, z, sol.x, cert, GAP_TOL, tol_eq)
    failing = list(kkt.failing)
    if not gap.passed:
        failing.append("duality_gap")
    if not eq.market_clears:
        failing.append("market_clearing")
    failing.extend(f"uplift:{b.bidder}" for b in eq.bidders if b.uplift > eq.tol)
    return kkt, gap, eq, failing


def run(inst: MarketInstance, mode: str = "exhaustive", tol_p: float = TOL_P,
        tol_kkt: float = TOL_KKT, tol_eq: float = TOL_EQ) -> RunReport:
    """Solve, certify and package everything into a :class:`RunReport`.

    Raises :class:`~quadmarket.search.InfeasibleMarket` when nothing clears.
    """
    t0 = time.perf_counter()
    res = solve(inst, SearchOptions(mode=mode, tol_p=tol_p, tol_eq=tol_eq))
    t1 = time.perf_counter()
    sol = res.solution
    cert = recover_duals(inst, res.z_star, sol, res.p0, tol_kkt)
    kkt, gap, eq, failing = _checks(inst, res.z_star, sol, cert, tol_kkt, tol_eq)
    contracts = build_contracts(inst, res.z_star, sol.x, cert)
    t2 = time.perf_counter()

    bidders = []
    for k, bd in enumerate(inst.bidders):
        bidders.append({
            "id": bd.id,
            "z": int(res.z_star[k]),
            "x": float(sol.x[k]),
            "y": float(sol.y[k]),
            "q": float(cert.q[k]),
            "p": float(cert.p[k]),
            "gamma": float(cert.gamma[k]),
            "alpha": float(cert.alpha[k]),
            "beta": float(cert.beta[k]),
            "payment": contracts[k].payment,
            "uplift": eq.bidders[k].uplift,
        })
    data = {
        "format": REPORT_FORMAT,
        "digest": instance_digest(inst),
        "instance": instance_to_dict(inst),
        "mode": res.mode,
        "linear_mode": inst.linear_mode,
        "z": [int(v) for v in res.z_star],
        "x": [float(v) for v in sol.x],
        "y": [float(v) for v in sol.y],
        "objective": float(sol.objective),
        "p0": float(cert.p0),
        "dual_objective": float(cert.dual_objective),
        "gap": gap.gap,
        "kkt": {"residuals": dict(kkt.residuals), "worst": kkt.worst, "tol": tol_kkt},
        "equilibrium": {"max_uplift": eq.max_uplift, "market_clears": eq.market_clears,
                        "clearing_residual": eq.clearing_residual},
        "bidders": bidders,
        "nodes": res.nodes_explored,
        "optimality_gap": res.optimality_gap,
        "timing": {"search_s": t1 - t0, "certify_s": t2 - t1},
        "tolerances": {"tol_p": tol_p, "tol_kkt": tol_kkt, "tol_eq": tol_eq, "gap": GAP_TOL},
        "failing": failing,
        "certified": not failing,
    }
    return RunReport(data)


@dataclass
class VerifyOutcome:
    failing: list[str] = field(default_factory=list)
    linear_mode: bool = False
    residuals: dict = field(default_factory=dict)
    gap: float = math.nan
    max_uplift: float = math.nan

    @property
    def passed(self) -> bool:
        return not self.failing


def verify_report(data: dict, tol_kkt: float | None = None) -> VerifyOutcome:
    """Re-check a stored report from its own numbers.

    Nothing is re-solved: the stored ``z``, ``x``, ``y`` and multipliers are
    checked for KKT, strong duality (dual objective recomputed from the
    multipliers) and equilibrium. The instance digest and the stored objective
    are checked for consistency too.
    """
    if data.get("format") != REPORT_FORMAT:
        raise ValueError(f"not a run report (format {data.get('format')!r})")
    tols = data.get("tolerances", {})
    tol_kkt = tols.get("tol_kkt", TOL_KKT) if tol_kkt is None else tol_kkt
    tol_eq = tols.get("tol_eq", TOL_EQ)
    inst = instance_from_dict(data["instance"])
    out = VerifyOutcome(linear_mode=inst.linear_mode)
    if instance_digest(inst) != data.get("digest"):
        out.failing.append("digest")

    z = tuple(int(v) for v in data["z"])
    x = np.array(data["x"], dtype=float)
    y = np.array(data["y"], dtype=float)
    rows = data["bidders"]
    if not (len(z) == len(x) == len(y) == len(rows) == inst.n):
        raise ValueError("report vectors do not match the instance size")
    objective = float(data["objective"])
    if abs(objective_value(inst, z, x) - objective) > 1e-9 * (1.0 + abs(objective)):
        out.failing.append("objective")
    sol = DispatchSolution(z=z, x=x, y=y, objective=objective)
    col = {k: np.array([float(r[k]) for r in rows]) for k in ("q", "p", "gamma", "alpha", "beta")}
    cert = DualCertificate(p0=float(data["p0"]), dual_objective=0.0, **col)
    cert.dual_objective = dual_objective(inst, z, cert)

    kkt, gap, eq, failing = _checks(inst, z, sol, cert, tol_kkt, tol_eq)
    out.failing.extend(failing)
    out.residuals = dict(kkt.residuals)
    out.gap = gap.gap
    out.max_uplift = eq.max_uplift
    return out


def _encode(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    return obj


def dump_report(data: dict) -> str:
    return json.dumps(_encode(data), indent=2)


def load_report(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)

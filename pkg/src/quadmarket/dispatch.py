"""Fixed-commitment dispatch and its dual certificate.

With the commitment vector fixed the problem separates by bidder once the
clearing constraint is priced. Each bidder then responds to the commodity
price ``p0`` by clamping its unconstrained optimum
``x0 + (a*p0 - c) / (2r)`` into its feasible interval, and the clearing price
is the root of the aggregate excess ``sum(a*x(p0)) - b0``. The root is found
by bisection and then made exact by solving the linear clearing equation on
the active set.

Once ``x`` and ``p0`` are known every other multiplier follows in closed form
(cone duals from the deviation, internal-constraint duals from stationarity,
commitment duals from ``d - h*q``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import BidderSpec, FeasibleInterval, MarketInstance, feasible_interval, objective_value

__all__ = [
    "TOL_P",
    "TOL_EQ",
    "TOL_KKT",
    "InfeasibleCommitment",
    "NonOptimalSolution",
    "DispatchSolution",
    "DualCertificate",
    "KktReport",
    "bidder_response",
    "aggregate_excess",
    "solve_fixed",
    "recover_duals",
    "kkt_residuals",
    "ramp_cost",
]

TOL_P = 1e-12
TOL_EQ = 1e-9
TOL_KKT = 1e-8

_MAX_DOUBLINGS = 200


class InfeasibleCommitment(ValueError):
    """No dispatch clears the market under the given commitment."""


class NonOptimalSolution(ValueError):
    """A solution handed to :func:`recover_duals` violates stationarity."""


@dataclass
class DispatchSolution:
    z: tuple[int, ...]
    x: np.ndarray
    y: np.ndarray
    objective: float


@dataclass
class DualCertificate:
    p0: float
    q: np.ndarray
    p: np.ndarray
    gamma: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    dual_objective: float


@dataclass
class KktReport:
    residuals: dict[str, float] = field(default_factory=dict)
    tol: float = TOL_KKT

    @property
    def passed(self) -> bool:
        return all(v <= self.tol for v in self.residuals.values())

    @property
    def failing(self) -> list[str]:
        return [k for k, v in self.residuals.items() if not v <= self.tol]

    @property
    def worst(self) -> float:
        return max(self.residuals.values(), default=0.0)


def _tie(a: float, b: float) -> bool:
    return abs(a - b) <= 1e-12 * max(1.0, abs(a), abs(b))


def _response_set(bd: BidderSpec, iv: FeasibleInterval, p0: float) -> tuple[float, float]:
    """Lower and upper end of the bidder's optimal output set at price ``p0``."""
    if iv.lo == iv.hi:
        return iv.lo, iv.lo
    if bd.r > 0:
        x = iv.clamp(bd.x0 + (bd.a * p0 - bd.c) / (2.0 * bd.r))
        return x, x
    gain = bd.a * p0
    if _tie(gain, bd.c):
        return iv.lo, iv.hi
    x = iv.lo if gain < bd.c else iv.hi
    return x, x


def bidder_response(bidder: BidderSpec, z: int, p0: float) -> float | FeasibleInterval:
    """Output that minimises the bidder's priced cost at commodity price ``p0``.

    A linear-mode bidder sitting exactly at its breakpoint ``a*p0 == c`` is
    indifferent over its whole interval, which is returned instead of a number.
    """
    iv = feasible_interval(bidder, z)
    if iv is None:
        raise InfeasibleCommitment(f"{bidder.id}: empty feasible interval for z={z}")
    lo, hi = _response_set(bidder, iv, p0)
    if lo != hi:
        return FeasibleInterval(lo, hi)
    return lo


def _contribution(a: float, lo: float, hi: float) -> tuple[float, float]:
    return (a * lo, a * hi) if a > 0 else (a * hi, a * lo)


class _FixedProblem:
    """Precomputed per-bidder data for one commitment vector."""

    def __init__(self, inst: MarketInstance, z: Sequence[int]):
        if len(z) != inst.n:
            raise ValueError(f"expected {inst.n} commitments, got {len(z)}")
        self.inst = inst
        self.z = tuple(int(v) for v in z)
        self.intervals = []
        for bd, zk in zip(inst.bidders, self.z):
            iv = feasible_interval(bd, zk)
            if iv is None:
                raise InfeasibleCommitment(f"{bd.id}: empty feasible interval for z={zk}")
            self.intervals.append(iv)
        lows, highs = zip(*(_contribution(bd.a, iv.lo, iv.hi)
                            for bd, iv in zip(inst.bidders, self.intervals)))
        self.range = (math.fsum(lows), math.fsum(highs))

    def excess_bounds(self, p0: float) -> tuple[float, float]:
        lo_sum = hi_sum = 0.0
        for bd, iv in zip(self.inst.bidders, self.intervals):
            lo, hi = _contribution(bd.a, *_response_set(bd, iv, p0))
            lo_sum += lo
            hi_sum += hi
        return lo_sum - self.inst.b0, hi_sum - self.inst.b0

    def breakpoints(self) -> list[float]:
        pts = []
        for bd, iv in zip(self.inst.bidders, self.intervals):
            if iv.lo == iv.hi:
                continue
            if bd.r > 0:
                for end in (iv.lo, iv.hi):
                    if math.isfinite(end):
                        pts.append((bd.c + 2.0 * bd.r * (end - bd.x0)) / bd.a)
            else:
                pts.append(bd.c / bd.a)
        return pts


def aggregate_excess(inst: MarketInstance, z: Sequence[int], p0: float) -> float:
    """Net supply ``sum(a*x(p0)) - b0`` at price ``p0``.

    Linear-mode bidders at their breakpoint count with the smallest value of
    ``a*x`` they can take, so the function is nondecreasing and its leftmost
    zero is the marginal clearing price.
    """
    return _FixedProblem(inst, z).excess_bounds(p0)[0]


def _bisect_leftmost(prob: _FixedProblem, tol_p: float) -> float | None:
    """Smallest ``p`` where the upper excess reaches zero; ``None`` if unbounded below."""
    pts = prob.breakpoints()
    lo = (min(pts) if pts else 0.0) - 1.0
    hi = (max(pts) if pts else 0.0) + 1.0

    def reaches(p):
        return prob.excess_bounds(p)[1] >= 0.0

    step = hi - lo
    for _ in range(_MAX_DOUBLINGS):
        if reaches(hi):
            break
        hi += step
        step *= 2.0
    else:
        raise InfeasibleCommitment("clearing price not bracketed from above")
    step = hi - lo
    for _ in range(_MAX_DOUBLINGS):
        if not reaches(lo):
            break
        lo -= step
        step *= 2.0
        if lo < -1e300:
            return None
    else:
        return None
    while hi - lo > max(tol_p, 4 * np.finfo(float).eps * abs(hi)):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if reaches(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _lower_stuck_price(prob: _FixedProblem) -> float:
    """Largest price at which every bidder still sits at its minimal ``a*x``."""
    cap = math.inf
    for bd, iv in zip(prob.inst.bidders, prob.intervals):
        if iv.lo == iv.hi:
            continue
        if bd.r > 0:
            end = iv.lo if bd.a > 0 else iv.hi
            cap = min(cap, (bd.c + 2.0 * bd.r * (end - bd.x0)) / bd.a)
        else:
            cap = min(cap, bd.c / bd.a)
    return cap


def _fill(prob: _FixedProblem, x: list[float], members: list[int], residual: float) -> None:
    """Spread ``residual`` of clearing quantity over ``members``, lowest index first."""
    for k in members:
        bd, iv = prob.inst.bidders[k], prob.intervals[k]
        room = abs(bd.a) * (iv.hi - iv.lo)
        take = min(max(residual, 0.0), room)
        if bd.a > 0:
            x[k] = iv.lo + take / bd.a
        else:
            x[k] = iv.hi - take / abs(bd.a)
        residual -= take


def _dispatch_at(prob: _FixedProblem, p0: float, window: float) -> tuple[float, list[float]]:
    """Active-set refinement of an approximate clearing price."""
    inst = prob.inst
    bidders, intervals = inst.bidders, prob.intervals
    n = inst.n
    x = [0.0] * n

    marginal = [k for k, (bd, iv) in enumerate(zip(bidders, intervals))
                if bd.r == 0 and iv.lo < iv.hi and abs(bd.c / bd.a - p0) <= window]
    if marginal:
        p0 = min((bidders[k].c / bidders[k].a for k in marginal), key=lambda v: abs(v - p0))
        rest = 0.0
        for k, (bd, iv) in enumerate(zip(bidders, intervals)):
            if k in marginal:
                x[k] = iv.lo if bd.a > 0 else iv.hi
            else:
                x[k] = _response_set(bd, iv, p0)[0]
            rest += bd.a * x[k]
        _fill(prob, x, marginal, inst.b0 - rest)
        return p0, x

    free = []
    fixed_sum = 0.0
    snap = []
    for k, (bd, iv) in enumerate(zip(bidders, intervals)):
        if bd.r == 0 or iv.lo == iv.hi:
            x[k] = _response_set(bd, iv, p0)[0]
        else:
            u = bd.x0 + (bd.a * p0 - bd.c) / (2.0 * bd.r)
            wx = window * abs(bd.a) / (2.0 * bd.r)
            if u <= iv.lo + wx:
                x[k] = iv.lo
                snap.append((bd.c + 2.0 * bd.r * (iv.lo - bd.x0)) / bd.a)
            elif u >= iv.hi - wx:
                x[k] = iv.hi
                snap.append((bd.c + 2.0 * bd.r * (iv.hi - bd.x0)) / bd.a)
            else:
                free.append(k)
                continue
        fixed_sum += bd.a * x[k]

    if free:
        slope = math.fsum(bidders[k].a ** 2 / (2.0 * bidders[k].r) for k in free)
        offset = math.fsum(bidders[k].a * (bidders[k].x0 - bidders[k].c / (2.0 * bidders[k].r))
                           for k in free)
        p_new = (inst.b0 - fixed_sum - offset) / slope
        if abs(p_new - p0) <= 1e3 * window:
            p0 = p_new
        for k in free:
            bd = bidders[k]
            x[k] = intervals[k].clamp(bd.x0 + (bd.a * p0 - bd.c) / (2.0 * bd.r))
    else:
        near = [v for v in snap if abs(v - p0) <= window]
        if near:
            p0 = min(near, key=lambda v: abs(v - p0))
    return p0, x


def solve_fixed(inst: MarketInstance, z: Sequence[int], tol_p: float = TOL_P,
                tol_eq: float = TOL_EQ) -> tuple[DispatchSolution, float]:
    """Optimal dispatch and clearing price for a fixed commitment vector.

    Returns ``(solution, p0)``. When the clearing equation has an interval of
    roots the leftmost one is returned.

    Raises
    ------
    InfeasibleCommitment
        If ``b0`` lies outside the range the committed bidders can cover.
    """
    prob = _FixedProblem(inst, z)
    scale = max(1.0, abs(inst.b0))
    lo_range, hi_range = prob.range
    if inst.b0 < lo_range - tol_eq * scale or inst.b0 > hi_range + tol_eq * scale:
        raise InfeasibleCommitment(
            f"b0={inst.b0} outside reachable range [{lo_range}, {hi_range}]")

    p_approx = None if inst.b0 <= lo_range else _bisect_leftmost(prob, tol_p)
    if p_approx is None:
        # Every bidder parked at its minimal contribution; any price up to the
        # first breakpoint clears, prefer zero when allowed.
        p0 = min(0.0, _lower_stuck_price(prob))
        x = [iv.lo if bd.a > 0 else iv.hi for bd, iv in zip(inst.bidders, prob.intervals)]
    else:
        window = 10.0 * max(tol_p, 4 * np.finfo(float).eps * abs(p_approx))
        p0, x = _dispatch_at(prob, p_approx, window)
        if abs(math.fsum(bd.a * xk for bd, xk in zip(inst.bidders, x)) - inst.b0) > tol_eq * scale:
            p0 = p_approx
            x = [_response_set(bd, iv, p0)[0] for bd, iv in zip(inst.bidders, prob.intervals)]

    residual = abs(math.fsum(bd.a * xk for bd, xk in zip(inst.bidders, x)) - inst.b0)
    if residual > tol_eq * scale:
        raise InfeasibleCommitment(f"clearing residual {residual:.3g} exceeds tolerance")

    xs = np.array(x, dtype=float)
    x0 = np.array([bd.x0 for bd in inst.bidders], dtype=float)
    sol = DispatchSolution(z=prob.z, x=xs, y=(xs - x0) ** 2,
                           objective=objective_value(inst, prob.z, x))
    return sol, float(p0)


def recover_duals(inst: MarketInstance, z: Sequence[int], sol: DispatchSolution, p0: float,
                  tol: float = TOL_KKT) -> DualCertificate:
    """Closed-form optimal multipliers for the fixed-commitment cone program.

    Cone multipliers are placed on the boundary of the Lorentz cone so that
    they are complementary to ``(y+1, y-1, 2(x-x0))``. Internal-constraint
    multipliers ``q`` are taken as small as dual feasibility allows, and
    commitment multipliers as ``p = d - h*q`` for every bidder, committed or
    not.

    Raises
    ------
    NonOptimalSolution
        If some bidder's stationarity condition cannot be met, meaning ``sol``
        is not optimal at ``p0``.
    """
    n = inst.n
    q = np.zeros(n)
    p = np.zeros(n)
    gamma = np.zeros(n)
    alpha = np.zeros(n)
    beta = np.zeros(n)
    terms = [inst.b0 * p0]
    for k, bd in enumerate(inst.bidders):
        xk, yk, zk = float(sol.x[k]), float(sol.y[k]), int(z[k])
        beta[k] = -bd.r * (xk - bd.x0)
        gamma[k] = bd.r * (1.0 + yk) / 2.0
        alpha[k] = bd.r * (1.0 - yk) / 2.0
        reduced = bd.c - bd.a * p0 - 2.0 * beta[k]
        scale = 1.0 + abs(bd.c) + abs(bd.a * p0) + abs(2.0 * beta[k])
        slack = bd.g * xk + bd.h * zk - bd.b
        active = abs(slack) <= tol * (1.0 + abs(bd.b) + abs(bd.h) + abs(bd.g * xk))
        if xk > tol * (1.0 + abs(xk)):
            if active and bd.g != 0:
                qk = reduced / bd.g
                if qk < 0:
                    if qk < -tol * scale:
                        raise NonOptimalSolution(f"{bd.id}: negative capacity multiplier {qk:.3g}")
                    qk = 0.0
            else:
                qk = 0.0
                if abs(reduced) > tol * scale:
                    raise NonOptimalSolution(f"{bd.id}: stationarity violated by {reduced:.3g}")
        elif reduced >= 0:
            qk = 0.0
        elif abs(reduced) <= tol * scale:
            qk = 0.0
        elif bd.g < 0 and active:
            qk = reduced / bd.g
        else:
            raise NonOptimalSolution(f"{bd.id}: output at zero but reduced cost {reduced:.3g} < 0")
        q[k] = qk
        p[k] = bd.d - bd.h * qk
        terms.extend((bd.b * qk, zk * p[k], -gamma[k], alpha[k], 2.0 * beta[k] * bd.x0))
    return DualCertificate(p0=float(p0), q=q, p=p, gamma=gamma, alpha=alpha, beta=beta,
                           dual_objective=math.fsum(terms))


def kkt_residuals(inst: MarketInstance, z: Sequence[int], sol: DispatchSolution,
                  cert: DualCertificate, tol: float = TOL_KKT) -> KktReport:
    """Largest violation of each complementarity family, plus primal/dual feasibility.

    ``comp1`` .. ``comp7`` follow the usual ordering: output, commitment,
    epigraph, clearing, internal constraint, fixed commitment, cone.
    """
    res = dict.fromkeys(("comp1", "comp2", "comp3", "comp4", "comp5", "comp6", "comp7"), 0.0)
    p0 = cert.p0
    clearing = math.fsum(bd.a * float(xk) for bd, xk in zip(inst.bidders, sol.x)) - inst.b0
    res["comp4"] = max(abs(p0 * clearing), abs(clearing))

    def bump(key, *vals):
        res[key] = max(res[key], *vals)

    for k, bd in enumerate(inst.bidders):
        xk, yk, zk = float(sol.x[k]), float(sol.y[k]), int(z[k])
        zs = int(sol.z[k])
        qk, pk = float(cert.q[k]), float(cert.p[k])
        gk, ak, bk = float(cert.gamma[k]), float(cert.alpha[k]), float(cert.beta[k])

        s1 = bd.c - bd.a * p0 - bd.g * qk - 2.0 * bk
        bump("comp1", -s1, -xk, abs(s1 * xk))
        s2 = bd.d - bd.h * qk - pk
        bump("comp2", -s2, abs(s2 * zs), 0.0 if zs in (0, 1) else 1.0)
        s3 = bd.r - gk - ak
        bump("comp3", -s3, -yk, abs(s3 * yk))
        s5 = bd.g * xk + bd.h * zs - bd.b
        bump("comp5", -qk, -s5, abs(qk * s5))
        bump("comp6", abs(pk * (zk - zs)))
        dev = 2.0 * (xk - bd.x0)
        primal_cone = math.hypot(yk - 1.0, dev) - (yk + 1.0)
        dual_cone = math.hypot(ak, bk) - gk
        ortho = gk * (yk + 1.0) + ak * (yk - 1.0) + bk * dev
        bump("comp7", primal_cone, dual_cone, abs(ortho))
    return KktReport({k: max(v, 0.0) for k, v in res.items()}, tol)


def ramp_cost(inst: MarketInstance, sol: DispatchSolution) -> float:
    return math.fsum(bd.r * float(yk) for bd, yk in zip(inst.bidders, sol.y))

"""Brute-force reference solver for small markets.

Enumerates all ``2**n`` commitment vectors (no symmetry reduction) and, for
each, maximises the concave dual function of the clearing constraint by
ternary search. This deliberately avoids the bisection/active-set machinery in
:mod:`quadmarket.dispatch` so the two can check each other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import BidderSpec, MarketInstance

__all__ = [
    "OracleResult",
    "OracleInfeasible",
    "oracle_solve",
    "random_instance",
    "FuzzOutcome",
    "fuzz_agreement",
]

MAX_BIDDERS = 12
METHOD = "enumerate+concave-dual-ternary"


class OracleInfeasible(ValueError):
    pass


@dataclass
class OracleResult:
    objective: float
    z: tuple[int, ...]
    x: np.ndarray
    p0: float
    method: str = METHOD


def _columns(inst: MarketInstance) -> dict[str, np.ndarray]:
    names = ("c", "d", "a", "g", "h", "b", "r", "x0")
    return {k: np.array([getattr(bd, k) for bd in inst.bidders], dtype=float) for k in names}


def _intervals(col, Z):
    rhs = col["b"] - col["h"] * Z
    g = col["g"]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(g != 0, rhs / np.where(g != 0, g, 1.0), 0.0)
    lo = np.where(g > 0, np.maximum(ratio, 0.0), 0.0)
    hi = np.where(g < 0, ratio, np.inf)
    empty = np.where(g < 0, ratio < 0, np.where(g == 0, rhs > 0, False))
    return lo, np.maximum(hi, lo), empty


class _Dual:
    """Dual function values for a batch of commitment vectors."""

    def __init__(self, col, lo, hi, b0):
        self.col, self.lo, self.hi, self.b0 = col, lo, hi, b0
        self.quad = col["r"] > 0
        self.r_safe = np.where(self.quad, col["r"], 1.0)

    def outputs(self, P):
        col = self.col
        coef = col["c"] - P[:, None] * col["a"]
        xq = np.clip(col["x0"] - coef / (2.0 * self.r_safe), self.lo, self.hi)
        xl = np.where(coef < 0, self.hi, self.lo)
        return coef, np.where(self.quad, xq, xl)

    def __call__(self, P):
        coef, x = self.outputs(P)
        r = self.col["r"]
        with np.errstate(invalid="ignore"):
            val = np.where(np.isinf(x), -np.inf, coef * np.where(np.isinf(x), 0.0, x) + r * (x - self.col["x0"]) ** 2)
        return P * self.b0 + val.sum(axis=1)


def _maximise(dual: _Dual, m: int, iterations: int):
    L, R = -np.ones(m), np.ones(m)
    fL, fR = dual(L), dual(R)
    bounded = np.ones(m, dtype=bool)
    for side in (-1.0, 1.0):
        edge, f_edge = (L, fL) if side < 0 else (R, fR)
        step = np.ones(m)
        active = np.ones(m, dtype=bool)
        for _ in range(120):
            if not active.any():
                break
            cand = edge + side * step
            f_cand = dual(cand)
            up = active & (f_cand > f_edge)
            edge = np.where(active, cand, edge)
            f_edge = np.where(up, f_cand, f_edge)
            active = up
            step = step * 2.0
        bounded &= ~active
        if side < 0:
            L = edge
        else:
            R = edge
    for _ in range(iterations):
        m1 = L + (R - L) / 3.0
        m2 = R - (R - L) / 3.0
        left = dual(m1) < dual(m2)
        L = np.where(left, m1, L)
        R = np.where(left, R, m2)
    P = 0.5 * (L + R)
    return P, dual(P), bounded


def oracle_solve(inst: MarketInstance, tol: float = 1e-6, iterations: int = 300) -> OracleResult:
    """Exact optimum by full enumeration and dual maximisation.

    Raises
    ------
    OracleInfeasible
        If no commitment vector yields a clearing dispatch.
    """
    n = inst.n
    if n > MAX_BIDDERS:
        raise ValueError(f"oracle handles at most {MAX_BIDDERS} bidders, got {n}")
    col = _columns(inst)
    Z = (np.arange(2**n)[:, None] >> np.arange(n - 1, -1, -1)) & 1
    lo, hi, empty = _intervals(col, Z)
    keep = ~empty.any(axis=1)
    Z, lo, hi = Z[keep], lo[keep], hi[keep]
    if not len(Z):
        raise OracleInfeasible("every commitment leaves some bidder without feasible output")

    dual = _Dual(col, lo, hi, inst.b0)
    P, values, bounded = _maximise(dual, len(Z), iterations)
    coef, x = dual.outputs(P)

    # Linear-mode bidders at their breakpoint may take any output in their interval.
    quad = col["r"] > 0
    at_break = ~quad & (np.abs(coef) <= 1e-9 * (1.0 + np.abs(col["c"])))
    a = col["a"]
    low = np.where(at_break, np.minimum(a * lo, a * hi), a * x)
    high = np.where(at_break, np.maximum(a * lo, a * hi), a * x)
    lo_sum, hi_sum = low.sum(axis=1), high.sum(axis=1)
    residual = np.maximum(lo_sum - inst.b0, 0.0) + np.maximum(inst.b0 - hi_sum, 0.0)
    ok = bounded & np.isfinite(values) & (residual <= tol * max(1.0, abs(inst.b0)))
    if not ok.any():
        raise OracleInfeasible("no commitment vector clears the market")

    objective = np.where(ok, values + Z @ col["d"], np.inf)
    best = float(objective.min())
    i = int(np.flatnonzero(objective <= best + 1e-9 * (1.0 + abs(best)))[0])
    xi = x[i].copy()
    short = inst.b0 - float(low[i].sum())
    for k in np.flatnonzero(at_break[i]):
        room = abs(a[k]) * (hi[i, k] - lo[i, k])
        take = min(max(short, 0.0), room)
        xi[k] = lo[i, k] + take / a[k] if a[k] > 0 else hi[i, k] - take / abs(a[k])
        short -= take
    return OracleResult(best, tuple(int(v) for v in Z[i]), xi, float(P[i]))


# -- Random instances ------------------------------------------------------

def random_instance(rng: np.random.Generator, n: int | None = None) -> MarketInstance:
    """Random capacity-constrained market in quadratic mode.

    Parameters are uniform: c in [0, 10], d in [0, 60], h (capacity) in
    [1, 20], r in [0.01, 2], x0 in [0, h], with a = 1, g = -1, b = 0. The
    auctioned quantity is uniform between 10% and 90% of total capacity. ``n``
    defaults to a uniform draw from 2..8.
    """
    if n is None:
        n = int(rng.integers(2, 9))
    bidders = []
    for k in range(n):
        h = rng.uniform(1.0, 20.0)
        bidders.append(BidderSpec(
            f"bidder_{k + 1}",
            c=rng.uniform(0.0, 10.0),
            d=rng.uniform(0.0, 60.0),
            a=1.0, g=-1.0, h=h, b=0.0,
            r=rng.uniform(0.01, 2.0),
            x0=rng.uniform(0.0, h),
        ))
    total = sum(bd.h for bd in bidders)
    return MarketInstance(tuple(bidders), rng.uniform(0.1, 0.9) * total)


@dataclass
class FuzzOutcome:
    count: int = 0
    agree: int = 0
    failures: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.agree == self.count


def fuzz_agreement(seed: int, count: int, tol: float = 1e-6) -> FuzzOutcome:
    """Compare :func:`~quadmarket.search.enumerate_solve` with :func:`oracle_solve`."""
    from .search import enumerate_solve

    rng = np.random.default_rng(seed)
    out = FuzzOutcome()
    for i in range(count):
        inst = random_instance(rng)
        exact = enumerate_solve(inst).objective
        ref = oracle_solve(inst, tol).objective
        out.count += 1
        if math.isclose(exact, ref, rel_tol=0.0, abs_tol=tol):
            out.agree += 1
        else:
            out.failures.append({"index": i, "n": inst.n, "search": exact, "oracle": ref})
    return out

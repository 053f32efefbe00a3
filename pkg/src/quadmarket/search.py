"""Optimal commitment search.

Two exact strategies over binary commitments:

* :func:`enumerate_solve` groups identical bidders into classes and only
  enumerates how many bidders of each class are committed (lowest index
  first), solving the fixed-commitment dispatch for each pattern.
* :func:`branch_and_bound` explores the same canonical patterns best-first,
  bounding nodes with the Lagrangian dual of the clearing constraint.

Both break objective ties by the lexicographically smallest commitment vector,
so they return identical results.
"""
from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

from .dispatch import TOL_EQ, TOL_P, DispatchSolution, InfeasibleCommitment, solve_fixed
from .model import BidderSpec, MarketInstance, feasible_interval

__all__ = [
    "InfeasibleMarket",
    "SearchOptions",
    "SearchResult",
    "symmetry_classes",
    "enumerate_solve",
    "lagrangian_bound",
    "node_bound",
    "branch_and_bound",
    "solve",
]

MAX_PATTERNS = 10**6
PRUNE_TOL = 1e-12


class InfeasibleMarket(ValueError):
    """No commitment vector admits a clearing dispatch."""


@dataclass(frozen=True)
class SearchOptions:
    mode: Literal["exhaustive", "bnb"] = "exhaustive"
    node_limit: int = 1_000_000
    tol_p: float = TOL_P
    tol_eq: float = TOL_EQ
    tie_tol: float = 1e-9

    def __post_init__(self):
        if self.mode not in ("exhaustive", "bnb"):
            raise ValueError(f"unknown search mode {self.mode!r}")
        if self.node_limit <= 0:
            raise ValueError("node_limit must be positive")


@dataclass
class SearchResult:
    z_star: tuple[int, ...]
    solution: DispatchSolution
    p0: float
    nodes_explored: int
    optimality_gap: float = 0.0
    mode: str = "exhaustive"

    @property
    def objective(self) -> float:
        return self.solution.objective


def symmetry_classes(inst: MarketInstance) -> list[list[int]]:
    """Indices of bidders with identical data, classes ordered by first member."""
    groups: dict[tuple, list[int]] = {}
    for k, bd in enumerate(inst.bidders):
        groups.setdefault(bd.params(), []).append(k)
    return list(groups.values())


@dataclass
class _Incumbent:
    tie_tol: float
    objective: float = math.inf
    z: tuple[int, ...] | None = None
    solution: DispatchSolution | None = None
    p0: float = math.nan

    def offer(self, z: tuple[int, ...], sol: DispatchSolution, p0: float) -> None:
        obj = sol.objective
        band = self.tie_tol * (1.0 + abs(self.objective)) if self.z is not None else 0.0
        if self.z is None or obj < self.objective - band or (obj <= self.objective + band and z < self.z):
            self.objective, self.z, self.solution, self.p0 = obj, z, sol, p0


def enumerate_solve(inst: MarketInstance, opts: SearchOptions | None = None) -> SearchResult:
    """Exhaustive search over symmetry-reduced commitment patterns."""
    opts = opts or SearchOptions()
    classes = symmetry_classes(inst)
    n_patterns = math.prod(len(c) + 1 for c in classes)
    if n_patterns > MAX_PATTERNS:
        raise ValueError(f"{n_patterns} commitment patterns exceed the limit of {MAX_PATTERNS}")
    best = _Incumbent(opts.tie_tol)
    for counts in itertools.product(*(range(len(c) + 1) for c in classes)):
        z = [0] * inst.n
        for members, m in zip(classes, counts):
            for k in members[:m]:
                z[k] = 1
        z = tuple(z)
        try:
            sol, p0 = solve_fixed(inst, z, opts.tol_p, opts.tol_eq)
        except InfeasibleCommitment:
            continue
        best.offer(z, sol, p0)
    if best.z is None:
        raise InfeasibleMarket("no commitment pattern clears the market")
    return SearchResult(best.z, best.solution, best.p0, n_patterns, 0.0, "exhaustive")


# -- Lagrangian bound ------------------------------------------------------

def _min_priced(coef: float, r: float, x0: float, lo: float, hi: float) -> float:
    """Minimum of ``coef*x + r*(x - x0)**2`` over ``[lo, hi]``."""
    if r > 0:
        x = min(max(x0 - coef / (2.0 * r), lo), hi)
        return coef * x + r * (x - x0) ** 2
    if coef > 0:
        return coef * lo
    if coef < 0:
        return -math.inf if hi == math.inf else coef * hi
    return 0.0


def _phi_fixed(bd: BidderSpec, z: int, p0: float) -> float:
    iv = feasible_interval(bd, z)
    if iv is None:
        return math.inf
    return bd.d * z + _min_priced(bd.c - p0 * bd.a, bd.r, bd.x0, iv.lo, iv.hi)


def _phi_free(bd: BidderSpec, p0: float) -> float:
    """Minimum over the relaxed set ``0 <= z <= 1``.

    The optimum either has ``z`` at a bound or the internal constraint active,
    so the two bound cases plus the minimum along the active edge are exact.
    """
    coef = bd.c - p0 * bd.a
    best = min(_phi_fixed(bd, 0, p0), _phi_fixed(bd, 1, p0))
    if bd.h != 0:
        # z = (b - g*x)/h in [0, 1]  <=>  g*x in [gl, gu]
        gl, gu = min(bd.b, bd.b - bd.h), max(bd.b, bd.b - bd.h)
        if bd.g > 0:
            xl, xu = gl / bd.g, gu / bd.g
        elif bd.g < 0:
            xl, xu = gu / bd.g, gl / bd.g
        else:
            xl, xu = (0.0, math.inf) if gl <= 0.0 <= gu else (math.inf, -math.inf)
        xl = max(xl, 0.0)
        if xl <= xu:
            edge = _min_priced(coef - bd.d * bd.g / bd.h, bd.r, bd.x0, xl, xu) + bd.d * bd.b / bd.h
            best = min(best, edge)
    return best


def lagrangian_bound(inst: MarketInstance, partial: Sequence[int | None], p0: float) -> float:
    """Dual function of the node at clearing price ``p0``.

    ``partial[k]`` is 0 or 1 for a fixed commitment and ``None`` for a free
    one (relaxed to ``[0, 1]``). By weak duality the value bounds the cost of
    every completion of the node from below; it is ``+inf`` when a fixed
    bidder has no feasible output.
    """
    total = p0 * inst.b0
    for bd, zk in zip(inst.bidders, partial):
        total += _phi_free(bd, p0) if zk is None else _phi_fixed(bd, zk, p0)
    return total


def node_bound(inst: MarketInstance, partial: Sequence[int | None],
               max_iter: int = 200) -> tuple[float, float]:
    """Maximise :func:`lagrangian_bound` over ``p0`` by ternary search.

    Returns ``(bound, p0)``; the bound is ``+inf`` when the dual is unbounded
    (the node has no feasible completion).
    """
    def dual(p):
        return lagrangian_bound(inst, partial, p)

    lo, hi = -1.0, 1.0
    f_lo, f_hi = dual(lo), dual(hi)
    if f_lo == math.inf or f_hi == math.inf:
        return math.inf, math.nan
    for side in (-1, 1):
        edge, f_edge = (lo, f_lo) if side < 0 else (hi, f_hi)
        step = 1.0
        for _ in range(100):
            cand = edge + side * step
            f_cand = dual(cand)
            step *= 2.0
            if f_cand > f_edge:
                edge, f_edge = cand, f_cand
                continue
            edge = cand
            break
        else:
            return math.inf, math.nan
        if side < 0:
            lo = edge
        else:
            hi = edge
    best_p, best_f = 0.0, -math.inf
    for _ in range(max_iter):
        if hi - lo <= 1e-12 * max(1.0, abs(lo), abs(hi)):
            break
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        f1, f2 = dual(m1), dual(m2)
        for p, f in ((m1, f1), (m2, f2)):
            if f > best_f:
                best_p, best_f = p, f
        if f1 < f2:
            lo = m1
        else:
            hi = m2
    mid = 0.5 * (lo + hi)
    f_mid = dual(mid)
    if f_mid > best_f:
        best_p, best_f = mid, f_mid
    return best_f, best_p


def branch_and_bound(inst: MarketInstance, opts: SearchOptions | None = None) -> SearchResult:
    """Best-first branch-and-bound over commitments with Lagrangian node bounds.

    Branching keeps identical bidders committed lowest index first, so only
    canonical commitment vectors are visited. If ``opts.node_limit`` is hit the
    incumbent is returned with a positive ``optimality_gap``.
    """
    opts = opts or SearchOptions(mode="bnb")
    classes = symmetry_classes(inst)
    cls_of = {k: members for members in classes for k in members}
    widths = []
    for bd in inst.bidders:
        iv = feasible_interval(bd, 1)
        widths.append(-1.0 if iv is None else abs(bd.a) * iv.width)

    best = _Incumbent(opts.tie_tol)
    nodes = 0
    counter = itertools.count()

    def leaf(z):
        try:
            sol, p0 = solve_fixed(inst, z, opts.tol_p, opts.tol_eq)
        except InfeasibleCommitment:
            return
        best.offer(z, sol, p0)

    def children(partial, k):
        members = cls_of[k]
        one = list(partial)
        zero = list(partial)
        for j in members:
            if j <= k and one[j] is None:
                one[j] = 1
            if j >= k and zero[j] is None:
                zero[j] = 0
        return tuple(one), tuple(zero)

    heap = []
    root = (None,) * inst.n
    if inst.n == 0:
        raise InfeasibleMarket("instance has no bidders")
    bound, _ = node_bound(inst, root)
    nodes += 1
    if bound < math.inf:
        heapq.heappush(heap, (bound, next(counter), root))

    while heap:
        bound, _, partial = heapq.heappop(heap)
        if bound >= best.objective - PRUNE_TOL:
            continue
        if nodes >= opts.node_limit:
            heapq.heappush(heap, (bound, next(counter), partial))
            break
        free = [k for k, v in enumerate(partial) if v is None]
        k = max(free, key=lambda j: (widths[j], -j))
        for child in children(partial, k):
            nodes += 1
            if None not in child:
                leaf(child)
                continue
            cb, _ = node_bound(inst, child)
            if cb < best.objective - PRUNE_TOL:
                heapq.heappush(heap, (cb, next(counter), child))

    if best.z is None:
        if heap:
            raise InfeasibleMarket("node limit reached before any feasible commitment was found")
        raise InfeasibleMarket("no commitment pattern clears the market")
    open_bounds = [b for b, _, _ in heap if b < best.objective - PRUNE_TOL]
    gap = max(0.0, best.objective - min(open_bounds)) if open_bounds else 0.0
    return SearchResult(best.z, best.solution, best.p0, nodes, gap, "bnb")


def solve(inst: MarketInstance, opts: SearchOptions | None = None) -> SearchResult:
    opts = opts or SearchOptions()
    if opts.mode == "bnb":
        return branch_and_bound(inst, opts)
    return enumerate_solve(inst, opts)

"""Scarf's two-technology market and its ramping-cost variant.

Five Smokestack plants (capacity 16, start-up 53, marginal 3) and ten High
Tech plants (capacity 7, start-up 30, marginal 2). The ramped variant adds
``r*(x - x0)**2`` with ``x0`` the optimal dispatch at demand 55.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Sequence

import numpy as np

from .model import BidderSpec, MarketInstance

__all__ = [
    "N_TYPE1",
    "N_TYPE2",
    "TYPE1",
    "TYPE2",
    "CAPACITY",
    "BASELINE_DEMAND",
    "scarf_base",
    "scarf_ramped",
    "baseline_dispatch",
    "scarf_instance",
]

N_TYPE1 = 5
N_TYPE2 = 10
TYPE1 = range(0, N_TYPE1)
TYPE2 = range(N_TYPE1, N_TYPE1 + N_TYPE2)
CAPACITY = {1: 16.0, 2: 7.0}
BASELINE_DEMAND = 55.0

# (c, d, capacity)
_PLANTS = {1: (3.0, 53.0, 16.0), 2: (2.0, 30.0, 7.0)}


def _plants(r1: float, r2: float, x0: Sequence[float]) -> tuple[BidderSpec, ...]:
    out = []
    for i, k in enumerate(TYPE1):
        c, d, cap = _PLANTS[1]
        out.append(BidderSpec(f"smokestack_{i + 1}", c=c, d=d, a=1.0, g=-1.0, h=cap,
                              b=0.0, r=float(r1), x0=float(x0[k])))
    for j, k in enumerate(TYPE2):
        c, d, cap = _PLANTS[2]
        out.append(BidderSpec(f"hightech_{j + 1}", c=c, d=d, a=1.0, g=-1.0, h=cap,
                              b=0.0, r=float(r2), x0=float(x0[k])))
    return tuple(out)


def scarf_base(D: float) -> MarketInstance:
    if D < 0:
        raise ValueError("demand must be nonnegative")
    return MarketInstance(_plants(0.0, 0.0, [0.0] * 15), float(D))


def scarf_ramped(D: float, r1: float, r2: float, x0: Sequence[float] | None = None,
                 baseline_demand: float = BASELINE_DEMAND) -> MarketInstance:
    """Scarf market with ramping costs ``r1`` (Smokestack) and ``r2`` (High Tech).

    ``x0`` defaults to ``baseline_dispatch(baseline_demand)``.
    """
    if D < 0:
        raise ValueError("demand must be nonnegative")
    if r1 < 0 or r2 < 0:
        raise ValueError("ramping coefficients must be nonnegative")
    if x0 is None:
        x0 = baseline_dispatch(baseline_demand)
    if len(x0) != N_TYPE1 + N_TYPE2:
        raise ValueError(f"x0 must have {N_TYPE1 + N_TYPE2} entries, got {len(x0)}")
    for k, v in enumerate(x0):
        cap = CAPACITY[1] if k in TYPE1 else CAPACITY[2]
        if not 0.0 <= v <= cap:
            raise ValueError(f"x0[{k}]={v} outside plant capacity [0, {cap}]")
    return MarketInstance(_plants(r1, r2, x0), float(D))


def scarf_instance(D: float, r1: float, r2: float,
                   baseline_demand: float = BASELINE_DEMAND) -> MarketInstance:
    """Base instance when both ramp coefficients are zero, ramped otherwise."""
    if r1 < 0 or r2 < 0:
        raise ValueError("ramping coefficients must be nonnegative")
    if r1 == 0 and r2 == 0:
        return scarf_base(D)
    return scarf_ramped(D, r1, r2, baseline_demand=baseline_demand)


@lru_cache(maxsize=8)
def _baseline(demand: float) -> tuple[float, ...]:
    from .search import enumerate_solve

    return tuple(float(v) for v in enumerate_solve(scarf_base(demand)).solution.x)


def baseline_dispatch(demand: float = BASELINE_DEMAND) -> np.ndarray:
    """Optimal dispatch of the base market at ``demand`` (lowest-index plants first).

    Used as the reference output ``x0`` of the ramped variant.
    """
    if demand < 0 or demand > N_TYPE1 * CAPACITY[1] + N_TYPE2 * CAPACITY[2]:
        raise ValueError(f"baseline demand {demand} outside [0, total capacity]")
    return np.array(_baseline(float(demand)))

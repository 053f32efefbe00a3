import dataclasses
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quadmarket.dispatch import InfeasibleCommitment, solve_fixed
from quadmarket.model import BidderSpec, MarketInstance
from quadmarket.oracle import random_instance
from quadmarket.scarf import scarf_base, scarf_ramped
from quadmarket.search import (
    InfeasibleMarket,
    SearchOptions,
    branch_and_bound,
    enumerate_solve,
    lagrangian_bound,
    node_bound,
    solve,
    symmetry_classes,
)


def _counts(z):
    return sum(z[:5]), sum(z[5:])


def test_scarf_has_66_patterns():
    classes = symmetry_classes(scarf_base(60))
    assert [len(c) for c in classes] == [5, 10]
    assert enumerate_solve(scarf_base(60)).nodes_explored == 66
    # the ramped baseline splits both plant types by reference output
    assert sorted(len(c) for c in symmetry_classes(scarf_ramped(60, 0.1, 0.1))) == [1, 2, 3, 9]


def test_enumerate_base_60():
    res = enumerate_solve(scarf_base(60))
    assert _counts(res.z_star) == (2, 4)
    assert res.objective == 378.0


def test_enumerate_ramped_70():
    res = enumerate_solve(scarf_ramped(70, 0.1, 0.1))
    assert _counts(res.z_star) == (4, 1)
    assert math.isclose(res.objective, 467.5, abs_tol=1e-9)


@pytest.mark.parametrize("r", [(0.1, 0.1), (0.1, 0.3), (2.0, 0.5)])
def test_enumerate_baseline_demand_keeps_x0(r):
    res = enumerate_solve(scarf_ramped(55, *r))
    assert res.z_star == (1, 1, 1, 0, 0, 1) + (0,) * 9
    assert res.objective == 347.0


def test_zero_demand_all_off():
    res = enumerate_solve(scarf_base(0))
    assert res.z_star == (0,) * 15 and res.objective == 0.0


def test_bnb_table_row_64():
    res = branch_and_bound(scarf_ramped(64, 0.1, 0.3))
    assert math.isclose(res.objective, 435.1, abs_tol=1e-9)
    assert _counts(res.z_star) == (4, 1)
    assert res.optimality_gap == 0.0


def test_solve_dispatches_on_mode():
    inst = scarf_ramped(66, 1.0, 1.0)
    a = solve(inst, SearchOptions(mode="exhaustive"))
    b = solve(inst, SearchOptions(mode="bnb"))
    assert a.mode == "exhaustive" and b.mode == "bnb"
    assert a.z_star == b.z_star
    with pytest.raises(ValueError):
        SearchOptions(mode="greedy")


def test_infeasible_market():
    bd = BidderSpec("k", c=1.0, d=1.0, a=1.0, g=-1.0, h=5.0, r=1.0)
    inst = MarketInstance((bd, dataclasses.replace(bd, id="j")), 20.0)
    with pytest.raises(InfeasibleMarket):
        enumerate_solve(inst)
    with pytest.raises(InfeasibleMarket):
        branch_and_bound(inst)


def test_node_limit_reports_gap():
    inst = random_instance(np.random.default_rng(4), n=8)
    res = branch_and_bound(inst, SearchOptions(mode="bnb", node_limit=26))
    full = enumerate_solve(inst)
    assert res.objective > full.objective
    assert res.optimality_gap > 0.0
    assert res.objective - res.optimality_gap <= full.objective + 1e-9


def test_node_limit_without_incumbent():
    with pytest.raises(InfeasibleMarket, match="node limit"):
        branch_and_bound(scarf_ramped(64, 0.1, 0.3), SearchOptions(mode="bnb", node_limit=3))


def test_bound_equals_fixed_objective_at_fixed_price():
    inst = scarf_ramped(60, 0.1, 0.1)
    z = (1, 1, 1, 0, 0, 1, 1) + (0,) * 8
    sol, p0 = solve_fixed(inst, z)
    assert math.isclose(lagrangian_bound(inst, z, p0), sol.objective, abs_tol=1e-9)


def test_root_bound_below_optimum():
    inst = scarf_ramped(60, 0.1, 0.1)
    bound, _ = node_bound(inst, (None,) * 15)
    assert bound <= 389.5 + 1e-9


def test_bound_zero_at_zero_price():
    inst = scarf_base(60)
    assert lagrangian_bound(inst, (None,) * 15, 0.0) == 0.0


def _completion_min(inst, partial):
    free = [k for k, v in enumerate(partial) if v is None]
    best = math.inf
    for bits in itertools.product((0, 1), repeat=len(free)):
        z = list(partial)
        for k, v in zip(free, bits):
            z[k] = v
        try:
            best = min(best, solve_fixed(inst, z)[0].objective)
        except InfeasibleCommitment:
            pass
    return best


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), p0=st.floats(-20, 40))
def test_lagrangian_bound_is_valid(seed, p0):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n=int(rng.integers(2, 7)))
    partial = tuple(rng.choice([0, 1, None]) for _ in range(inst.n))
    best = _completion_min(inst, partial)
    if best == math.inf:
        return
    assert lagrangian_bound(inst, partial, p0) <= best + 1e-9 * (1 + abs(best))
    assert node_bound(inst, partial)[0] <= best + 1e-9 * (1 + abs(best))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_bnb_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng)
    a, b = enumerate_solve(inst), branch_and_bound(inst)
    assert abs(a.objective - b.objective) <= 1e-9
    assert a.z_star == b.z_star


def test_ties_pick_lexicographically_smallest_z():
    bd = BidderSpec("a", c=1.0, d=2.0, a=1.0, g=-1.0, h=5.0, r=1.0, x0=1.0)
    other = BidderSpec("b", c=1.0, d=2.0, a=1.0, g=-1.0, h=5.0, r=1.0, x0=1.0)
    inst = MarketInstance((bd, other), 3.0)
    assert enumerate_solve(inst).z_star == (1, 0) or enumerate_solve(inst).z_star == (1, 1)
    for r in (enumerate_solve(inst), branch_and_bound(inst)):
        assert r.z_star != (0, 1)

import math

import numpy as np
import pytest

from quadmarket.dispatch import solve_fixed
from quadmarket.model import BidderSpec, MarketInstance
from quadmarket.oracle import (
    METHOD,
    OracleInfeasible,
    fuzz_agreement,
    oracle_solve,
    random_instance,
)
from quadmarket.scarf import scarf_base, scarf_ramped
from quadmarket.search import enumerate_solve


def test_truncated_base_market():
    full = scarf_base(20)
    inst = MarketInstance(full.bidders[:2] + full.bidders[5:8], 20.0)
    res = oracle_solve(inst)
    assert res.method == METHOD
    assert abs(res.objective - enumerate_solve(inst).objective) <= 1e-6


def test_truncated_ramped_market():
    full = scarf_ramped(30, 0.1, 0.1)
    inst = MarketInstance(full.bidders[:3] + full.bidders[5:8], 30.0)
    assert abs(oracle_solve(inst).objective - enumerate_solve(inst).objective) <= 1e-6


def test_forced_single_bidder():
    bd = BidderSpec("k", c=2.0, d=9.0, a=1.0, g=-1.0, h=10.0, r=0.5, x0=4.0)
    res = oracle_solve(MarketInstance((bd,), 4.0))
    assert math.isclose(res.objective, 2.0 * 4.0 + 9.0, abs_tol=1e-9)
    assert res.z == (1,)


def test_oracle_infeasible():
    bd = BidderSpec("k", c=1.0, d=1.0, a=1.0, g=-1.0, h=5.0, r=1.0)
    with pytest.raises(OracleInfeasible):
        oracle_solve(MarketInstance((bd,), 50.0))


def test_oracle_size_limit():
    with pytest.raises(ValueError):
        oracle_solve(scarf_base(60))


def test_random_instance_contract():
    rng = np.random.default_rng(3)
    for _ in range(50):
        inst = random_instance(rng)
        assert 2 <= inst.n <= 8
        total = sum(bd.h for bd in inst.bidders)
        assert 0.1 * total <= inst.b0 <= 0.9 * total
        for bd in inst.bidders:
            assert 0 <= bd.c <= 10 and 0 <= bd.d <= 60 and 1 <= bd.h <= 20
            assert 0.01 <= bd.r <= 2 and 0 <= bd.x0 <= bd.h
            assert (bd.a, bd.g, bd.b) == (1.0, -1.0, 0.0)
    a = random_instance(np.random.default_rng(11))
    b = random_instance(np.random.default_rng(11))
    assert a == b


def test_dual_value_bounds_fixed_dispatch():
    # weak duality spot check: the dual function never exceeds the dispatch cost
    rng = np.random.default_rng(5)
    from quadmarket.search import lagrangian_bound

    for _ in range(20):
        inst = random_instance(rng)
        res = enumerate_solve(inst)
        for p0 in rng.uniform(-10, 30, 5):
            assert lagrangian_bound(inst, res.z_star, p0) <= res.objective + 1e-9


def test_fuzz_small_batch():
    out = fuzz_agreement(seed=1, count=20)
    assert out.passed, out.failures

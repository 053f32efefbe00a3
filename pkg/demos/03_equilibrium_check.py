"""
Certifying an equilibrium bidder by bidder
==========================================

At the posted prices every bidder solves its own small problem. If its
assigned output is one of its optima the uplift is zero; otherwise the
uplift measures what it gives up by following the operator.
"""

from quadmarket import BidderSpec, PriceSystem, enumerate_solve, recover_duals, scarf_ramped
from quadmarket import solve_individual, verify_equilibrium

# A High Tech plant with r=1 facing unit price 12 and start-up price 30 opens
# and produces 5.
plant = BidderSpec("hightech", c=2.0, d=30.0, a=1.0, g=-1.0, h=7.0, r=1.0, x0=0.0)
best = solve_individual(plant, 12.0, 30.0)
print(f"individual optimum: x={best.x}, z={best.z}, value={best.value}")

# The dual prices of a solved market certify it.
inst = scarf_ramped(60, 0.1, 0.1)
res = enumerate_solve(inst)
cert = recover_duals(inst, res.z_star, res.solution, res.p0)
rep = verify_equilibrium(inst, res.z_star, res.solution.x, cert)
print(f"dual prices: passed={rep.passed}, max uplift {rep.max_uplift:.2g}")

# Give a closed High Tech plant the partial plant's start-up price instead and
# it would rather open: the check reports an uplift of 2.5 for it.
t = list(cert.p)
t[7] = 30.0
rep = verify_equilibrium(inst, res.z_star, res.solution.x, PriceSystem(cert.p0, tuple(t)))
worst = max(rep.bidders, key=lambda b: b.uplift)
print(f"tampered prices: passed={rep.passed}, {worst.bidder} uplift {worst.uplift:.2f}")

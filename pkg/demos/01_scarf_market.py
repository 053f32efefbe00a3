"""
Scarf's market without ramping costs
====================================

Five Smokestack plants and ten High Tech plants serve a fixed demand. Each
plant pays a start-up cost when committed, so the cheapest mix jumps around
as demand grows.
"""

import numpy as np

from quadmarket import PriceSystem, enumerate_solve, scarf_base, verify_equilibrium

# The whole search is 6 x 11 commitment patterns because identical plants are
# interchangeable; only how many of each type run matters.
for D in range(56, 71, 2):
    res = enumerate_solve(scarf_base(D))
    z, x = np.array(res.z_star), res.solution.x
    print(f"D={D}: {z[:5].sum()} smokestack ({x[:5].sum():4.0f}) "
          f"{z[5:].sum():2d} high tech ({x[5:].sum():4.0f})  cost {res.objective:.0f}")

# One price system supports every one of those allocations: 3 per unit of
# output, 53 to each committed Smokestack plant and 23 to each High Tech one.
for D in range(56, 71, 2):
    inst = scarf_base(D)
    res = enumerate_solve(inst)
    t = tuple(53.0 if k < 5 else 23.0 for k in range(inst.n))
    rep = verify_equilibrium(inst, res.z_star, res.solution.x, PriceSystem(3.0, t))
    print(f"D={D}: equilibrium {'holds' if rep.passed else 'fails'}, max uplift {rep.max_uplift:.2g}")

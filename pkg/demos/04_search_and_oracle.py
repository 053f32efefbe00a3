"""
Three ways to the same optimum
==============================

Exhaustive search over symmetry classes, best-first branch-and-bound with
Lagrangian bounds, and a brute-force oracle that maximises the dual over all
``2**n`` commitments.
"""

import time

import numpy as np

from quadmarket import branch_and_bound, enumerate_solve, oracle_solve, random_instance

rng = np.random.default_rng(2024)
worst_oracle, worst_bnb, nodes = 0.0, 0.0, []
t0 = time.perf_counter()
for _ in range(50):
    inst = random_instance(rng)
    ex = enumerate_solve(inst)
    bb = branch_and_bound(inst)
    orc = oracle_solve(inst)
    assert ex.z_star == bb.z_star
    worst_oracle = max(worst_oracle, abs(orc.objective - ex.objective))
    worst_bnb = max(worst_bnb, abs(bb.objective - ex.objective))
    nodes.append((bb.nodes_explored, ex.nodes_explored))
elapsed = time.perf_counter() - t0

nodes = np.array(nodes)
print(f"50 markets in {elapsed:.1f}s")
print(f"largest oracle difference {worst_oracle:.2e}, branch-and-bound {worst_bnb:.2e}")
print(f"mean nodes: branch-and-bound {nodes[:, 0].mean():.1f}, patterns enumerated {nodes[:, 1].mean():.1f}")

"""
Prices once ramping costs are added
===================================

Each plant now pays ``r*(x - x0)**2`` for moving away from its output at
demand 55. Commodity and start-up prices come from the dual of the
fixed-commitment cone program and start to vary with demand.
"""

from quadmarket import build_contracts, enumerate_solve, recover_duals, scarf_ramped
from quadmarket.golden import table_row

# The baseline itself is reproduced exactly: nobody ramps.
row = table_row(55, 1.0, 1.0)
print(f"D=55, r=1: cost {row.total:.1f}, ramp {row.ramp:.1f}")

# A demand sweep for three ramping levels. With steep ramps the start-up price
# turns negative: plants pay to be committed in exchange for a high unit price.
for r1, r2 in [(0.1, 0.1), (0.1, 0.3), (1.0, 1.0)]:
    print(f"\nr1={r1}, r2={r2}")
    print("   D   total   ramp   unit  smoke  hightech(partial)  hightech(full/closed)")
    for D in range(56, 71, 2):
        r = table_row(D, r1, r2)
        print(f"  {D:3d} {r.total:7.2f} {r.ramp:6.2f} {r.unit_price:6.2f} {r.t1_full_closed_price:7.2f}"
              f" {r.t2_partial_price:10.2f} {r.t2_full_closed_price:18.2f}")

# Payments for a single case: each bidder gets p0*x plus its start-up price.
inst = scarf_ramped(60, 0.1, 0.1)
res = enumerate_solve(inst)
cert = recover_duals(inst, res.z_star, res.solution, res.p0)
for c in build_contracts(inst, res.z_star, res.solution.x, cert):
    if c.z_committed:
        print(f"{c.bidder:14s} x={c.x_committed:5.2f} paid {c.payment:7.2f}")

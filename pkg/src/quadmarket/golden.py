"""Published Scarf results and the harness that diffs them against the solver.

Plants are labelled per group the way the published tables group them:

* ``closed``: not committed;
* ``full``: committed, at capacity and still at its reference output ``x0``;
* ``partial``: any other committed plant.

A committed plant pushed to capacity away from ``x0`` therefore counts as
partial. The ``saturated`` counts (committed and at capacity) are carried
alongside so the output-level labelling is available too.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .dispatch import DualCertificate, KktReport, TOL_KKT, kkt_residuals, ramp_cost, recover_duals
from .model import MarketInstance
from .pricing import EquilibriumReport, GapReport, PriceSystem, check_strong_duality, verify_equilibrium
from .scarf import CAPACITY, TYPE1, TYPE2, scarf_base, scarf_instance
from .search import SearchOptions, SearchResult, solve

__all__ = [
    "DEMANDS",
    "RAMP_CASES",
    "CELL_TOL",
    "BASE_TABLE",
    "BASE_PRICES",
    "RAMPED_TABLES",
    "SWEEP_COLUMNS",
    "CaseResult",
    "SweepRow",
    "CellDiff",
    "GoldenReport",
    "plant_label",
    "solve_case",
    "table_row",
    "base_equilibrium",
    "golden_tables",
]

DEMANDS = tuple(range(56, 71, 2))
RAMP_CASES = ((0.1, 0.1), (0.1, 0.3), (1.0, 1.0))
CELL_TOL = 0.005
LABEL_TOL = 1e-6

# demand -> (type-1 units, type-2 units, type-1 output, type-2 output, total cost)
BASE_TABLE = {
    56: (0, 8, 0, 56, 352),
    58: (1, 6, 16, 42, 365),
    60: (2, 4, 32, 28, 378),
    62: (3, 2, 48, 14, 391),
    64: (4, 0, 64, 0, 404),
    66: (2, 5, 31, 35, 419),
    68: (3, 3, 47, 21, 432),
    70: (0, 10, 0, 70, 440),
}

# commodity price, type-1 start-up price, type-2 start-up price
BASE_PRICES = (3.0, 53.0, 23.0)

ALLOCATION_COLUMNS = (
    "t1_partial_n", "t1_partial_x", "t1_full_n", "t1_full_x",
    "t2_partial_n", "t2_partial_x", "t2_full_n", "t2_full_x",
    "ramp", "total",
)
PRICE_COLUMNS = ("unit_price", "t1_partial_price", "t1_full_closed_price",
                 "t2_partial_price", "t2_full_closed_price")
PUBLISHED_COLUMNS = ALLOCATION_COLUMNS + PRICE_COLUMNS

# (r1, r2) -> demand -> published values in PUBLISHED_COLUMNS order
RAMPED_TABLES = {
    (0.1, 0.1): {
        56: (3, 45.00, 0, 0, 1, 4.00, 1, 7, 1.90, 377.90, 2.80, 53.00, 53.00, 30, 24.40),
        58: (3, 46.50, 0, 0, 1, 4.50, 1, 7, 2.10, 383.60, 2.90, 53.00, 53.00, 30, 23.70),
        60: (0, 0, 3, 48, 1, 5.00, 1, 7, 2.50, 389.50, 3.00, 53.00, 53.00, 30, 23.00),
        62: (0, 0, 3, 48, 1, 7.00, 1, 7, 4.90, 395.90, 3.40, 46.60, 46.60, 30, 20.20),
        64: (3, 47.40, 0, 0, 2, 9.60, 1, 7, 4.62, 429.02, 2.96, 53.00, 53.00, 30, 23.28),
        66: (0, 0, 3, 48, 2, 11.00, 1, 7, 6.05, 435.05, 3.10, 51.40, 51.40, 30, 22.30),
        68: (0, 0, 3, 48, 2, 13.00, 1, 7, 8.45, 441.45, 3.30, 48.20, 48.20, 30, 20.90),
        70: (1, 15.00, 3, 48, 0, 0, 1, 7, 22.50, 467.50, 6.00, 53.00, 5.00, 2, 2.00),
    },
    (0.1, 0.3): {
        56: (3, 47.4, 0, 0, 1, 1.6, 1, 7, 0.78, 379.18, 2.96, 53.00, 53.00, 30.00, 23.28),
        58: (0, 0, 3, 48, 1, 3.0, 1, 7, 2.70, 385.70, 3.80, 40.20, 40.20, 30.00, 17.40),
        60: (0, 0, 3, 48, 1, 5.0, 1, 7, 7.50, 394.50, 5.00, 21.00, 21.00, 30.00, 9.00),
        62: (0, 0, 3, 48, 0, 0, 2, 14, 14.70, 405.70, 6.20, 1.80, 1.80, 30.00, 0.60),
        64: (1, 9.0, 3, 48, 0, 0, 1, 7, 4.62, 435.10, 4.80, 53.00, 24.20, 10.40, 10.40),
        66: (1, 11.0, 3, 48, 0, 0, 1, 7, 12.10, 445.10, 5.20, 53.00, 17.80, 7.60, 7.60),
        68: (1, 13.0, 3, 48, 0, 0, 1, 7, 16.90, 455.90, 5.60, 53.00, 11.40, 4.80, 4.80),
        70: (1, 15.0, 3, 48, 0, 0, 1, 7, 22.50, 467.50, 6.00, 53.00, 5.00, 2.00, 2.00),
    },
    (1.0, 1.0): {
        56: (0, 0, 3, 48, 1, 1, 1, 7, 1.0, 380.0, 4, 37, 37, 30, 16),
        58: (0, 0, 3, 48, 1, 3, 1, 7, 9.0, 392.0, 8, -27, -27, 30, -12),
        60: (0, 0, 3, 48, 1, 5, 1, 7, 25.0, 412.0, 12, -91, -91, 30, -40),
        62: (0, 0, 3, 48, 1, 7, 1, 7, 49.0, 440.0, 16, -155, -155, 30, -68),
        64: (0, 0, 3, 48, 2, 9, 1, 7, 40.5, 465.5, 11, -75, -75, 30, -33),
        66: (0, 0, 3, 48, 2, 11, 1, 7, 60.5, 489.5, 13, -107, -107, 30, -47),
        68: (0, 0, 3, 48, 2, 13, 1, 7, 84.5, 517.5, 15, -139, -139, 30, -61),
        70: (0, 0, 3, 48, 3, 15, 1, 7, 75.0, 542.0, 12, -91, -91, 30, -40),
    },
}

# Cells whose printed value is a known typo: (case, demand, column) -> (value compared against, note)
EXPECTED_DEVIATIONS = {
    ((0.1, 0.3), 64, "ramp"): (
        8.10,
        "printed ramp 4.62 disagrees with the printed total 435.10 (= 427.00 variable/start-up "
        "+ 8.10 ramp); compared against 8.10",
    ),
}

# Cells that no single labelling rule reproduces together with the rest of the tables.
KNOWN_CONFLICTS = {
    ((0.1, 0.3), 62): (
        "printed counts list both committed type-2 plants as full, yet the printed start-up "
        "price column gives 30 to a partial type-2 plant; the plant at capacity but away from "
        "its reference output is labelled partial here, as in the other two ramped tables"
    ),
}

SWEEP_COLUMNS = (
    "demand", "r1", "r2",
    *ALLOCATION_COLUMNS,
    "t1_saturated_n", "t2_saturated_n",
    *PRICE_COLUMNS,
    "objective", "p0", "nodes",
)


def plant_label(z: int, x: float, x0: float, capacity: float, tol: float = LABEL_TOL) -> str:
    """``closed``, ``full`` or ``partial`` for one plant (see module notes)."""
    if not z:
        return "closed"
    if x >= capacity - tol and abs(x - x0) <= tol:
        return "full"
    return "partial"


@dataclass
class CaseResult:
    """One solved Scarf case with its certificate checks."""

    demand: float
    r1: float
    r2: float
    instance: MarketInstance
    result: SearchResult
    cert: DualCertificate
    kkt: KktReport
    gap: GapReport
    equilibrium: EquilibriumReport

    @property
    def quadratic(self) -> bool:
        return not self.instance.linear_mode


def solve_case(D: float, r1: float, r2: float, mode: str = "exhaustive",
               tol_kkt: float = TOL_KKT) -> CaseResult:
    inst = scarf_instance(D, r1, r2)
    res = solve(inst, SearchOptions(mode=mode))
    cert = recover_duals(inst, res.z_star, res.solution, res.p0, tol_kkt)
    kkt = kkt_residuals(inst, res.z_star, res.solution, cert, tol_kkt)
    gap = check_strong_duality(res.objective, cert, inst.linear_mode)
    eq = verify_equilibrium(inst, res.z_star, res.solution.x, cert)
    return CaseResult(float(D), float(r1), float(r2), inst, res, cert, kkt, gap, eq)


@dataclass
class SweepRow:
    demand: float
    r1: float
    r2: float
    t1_partial_n: int
    t1_partial_x: float
    t1_full_n: int
    t1_full_x: float
    t2_partial_n: int
    t2_partial_x: float
    t2_full_n: int
    t2_full_x: float
    ramp: float
    total: float
    t1_saturated_n: int
    t2_saturated_n: int
    unit_price: float
    t1_partial_price: float
    t1_full_closed_price: float
    t2_partial_price: float
    t2_full_closed_price: float
    objective: float
    p0: float
    nodes: int

    def as_dict(self) -> dict:
        return asdict(self)

    def values(self) -> list:
        return [getattr(self, c) for c in SWEEP_COLUMNS]


def _group_price(labels: list[str], prices: list[float], order: tuple[str, ...]) -> float:
    for want in order:
        for lab, p in zip(labels, prices):
            if lab == want:
                return float(p)
    return math.nan


def row_from_case(case: CaseResult) -> SweepRow:
    inst, sol, cert = case.instance, case.result.solution, case.cert
    groups = {}
    for t, members, cap in ((1, TYPE1, CAPACITY[1]), (2, TYPE2, CAPACITY[2])):
        labels, xs, ps, sat = [], [], [], 0
        for k in members:
            zk, xk = int(sol.z[k]), float(sol.x[k])
            labels.append(plant_label(zk, xk, inst.bidders[k].x0, cap))
            xs.append(xk)
            ps.append(float(cert.p[k]))
            sat += int(zk == 1 and xk >= cap - LABEL_TOL)
        groups[t] = (labels, xs, ps, sat)

    def stats(t):
        labels, xs, ps, sat = groups[t]
        part = [x for lab, x in zip(labels, xs) if lab == "partial"]
        full = [x for lab, x in zip(labels, xs) if lab == "full"]
        return {
            f"t{t}_partial_n": len(part),
            f"t{t}_partial_x": math.fsum(part),
            f"t{t}_full_n": len(full),
            f"t{t}_full_x": math.fsum(full),
            f"t{t}_saturated_n": sat,
            f"t{t}_partial_price": _group_price(labels, ps, ("partial", "closed", "full")),
            f"t{t}_full_closed_price": _group_price(labels, ps, ("full", "closed", "partial")),
        }

    return SweepRow(
        demand=case.demand, r1=case.r1, r2=case.r2,
        ramp=ramp_cost(inst, sol), total=sol.objective,
        unit_price=cert.p0, objective=sol.objective, p0=case.result.p0,
        nodes=case.result.nodes_explored,
        **stats(1), **stats(2),
    )


def table_row(D: float, r1: float, r2: float, mode: str = "exhaustive") -> SweepRow:
    return row_from_case(solve_case(D, r1, r2, mode))


def base_equilibrium(D: float, prices: tuple[float, float, float] = BASE_PRICES) -> EquilibriumReport:
    """Certify the fixed prices ``(t0, type-1, type-2)`` against the base optimum at ``D``."""
    case = solve_case(D, 0.0, 0.0)
    t0, p1, p2 = prices
    t = tuple(p1 if k in TYPE1 else p2 for k in range(case.instance.n))
    return verify_equilibrium(case.instance, case.result.z_star, case.result.solution.x,
                              PriceSystem(t0, t))


@dataclass
class CellDiff:
    case: str
    demand: int
    column: str
    published: float
    expected: float
    computed: float
    ok: bool
    note: str = ""


@dataclass
class GoldenReport:
    cells: list[CellDiff] = field(default_factory=list)
    tol: float = CELL_TOL

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.cells)

    @property
    def failures(self) -> list[CellDiff]:
        return [c for c in self.cells if not c.ok]

    @property
    def annotations(self) -> list[CellDiff]:
        return [c for c in self.cells if c.note]

    def for_case(self, case: str) -> "GoldenReport":
        return GoldenReport([c for c in self.cells if c.case == case], self.tol)

    def summary(self) -> str:
        lines = [f"{len(self.cells)} cells, {len(self.failures)} outside +/-{self.tol}"]
        for c in self.cells:
            if c.note or not c.ok:
                flag = "ok  " if c.ok else "FAIL"
                lines.append(f"{flag} {c.case} D={c.demand} {c.column}: published {c.published:g}, "
                             f"computed {c.computed:.6g}" + (f" [{c.note}]" if c.note else ""))
        return "\n".join(lines)


def case_name(r1: float, r2: float) -> str:
    return f"r1={r1:g},r2={r2:g}"


def _diff(report, case, D, column, published, computed, tol, expected=None, note=""):
    expected = published if expected is None else expected
    ok = bool(np.isfinite(computed)) and abs(computed - expected) <= tol
    report.cells.append(CellDiff(case, D, column, float(published), float(expected),
                                 float(computed), ok, note))


def golden_tables(tol: float = CELL_TOL, mode: str = "exhaustive") -> GoldenReport:
    """Diff every published Scarf cell against a fresh solve."""
    report = GoldenReport(tol=tol)
    base = case_name(0.0, 0.0)
    for D, (n1, n2, x1, x2, total) in BASE_TABLE.items():
        case = solve_case(D, 0.0, 0.0, mode)
        z, x = case.result.z_star, case.result.solution.x
        got = (sum(z[k] for k in TYPE1), sum(z[k] for k in TYPE2),
               math.fsum(x[k] for k in TYPE1), math.fsum(x[k] for k in TYPE2),
               case.result.objective)
        for col, pub, val in zip(("t1_units", "t2_units", "t1_x", "t2_x", "total"),
                                 (n1, n2, x1, x2, total), got):
            _diff(report, base, D, col, pub, val, tol)
    for (r1, r2), table in RAMPED_TABLES.items():
        name = case_name(r1, r2)
        for D, published in table.items():
            row = table_row(D, r1, r2, mode)
            conflict = KNOWN_CONFLICTS.get(((r1, r2), D), "")
            for col, pub in zip(PUBLISHED_COLUMNS, published):
                expected, note = EXPECTED_DEVIATIONS.get(((r1, r2), D, col), (None, ""))
                computed = getattr(row, col)
                if conflict and not note and col in ALLOCATION_COLUMNS and abs(computed - pub) > tol:
                    note = conflict
                _diff(report, name, D, col, pub, computed, tol, expected, note)
    return report

"""Exact clearing and pricing for markets with start-up and quadratic ramping costs.

Each bidder ``k`` offers output ``x_k`` at linear cost ``c_k``, a binary
commitment ``z_k`` at fixed cost ``d_k`` and a ramping penalty
``r_k*(x_k - x0_k)**2``. The auctioneer clears ``sum(a_k*x_k) = b0`` at least
cost. Commodity and start-up prices are read off the dual of the
fixed-commitment cone program and certified as a competitive equilibrium.
"""
from .dispatch import (
    DispatchSolution,
    DualCertificate,
    InfeasibleCommitment,
    KktReport,
    NonOptimalSolution,
    aggregate_excess,
    bidder_response,
    kkt_residuals,
    ramp_cost,
    recover_duals,
    solve_fixed,
)
from .model import (
    BidderSpec,
    FeasibleInterval,
    InstanceFormatError,
    MarketInstance,
    ValidationReport,
    feasible_interval,
    instance_digest,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    objective_value,
    validate_instance,
)
from .oracle import OracleInfeasible, OracleResult, fuzz_agreement, oracle_solve, random_instance
from .pricing import (
    Contract,
    EquilibriumReport,
    GapReport,
    PriceSystem,
    build_contracts,
    certify,
    check_strong_duality,
    solve_individual,
    verify_equilibrium,
)
from .scarf import baseline_dispatch, scarf_base, scarf_instance, scarf_ramped
from .search import (
    InfeasibleMarket,
    SearchOptions,
    SearchResult,
    branch_and_bound,
    enumerate_solve,
    lagrangian_bound,
    node_bound,
    solve,
    symmetry_classes,
)

__version__ = "0.1.0"

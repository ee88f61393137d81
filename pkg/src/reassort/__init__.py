"""Online assortment policies for reusable products, benchmarked
against the expected-inventory LP relaxation."""

from .bench import NO_RENTAL, RENTAL, ec21_lp_value, gen_ec21, gen_ec8, gen_footnote9
from .dp import (
    ValueTables,
    build_tables,
    epsilon_star,
    hybrid_ratio,
    inventory_dp,
    optimistic_dp,
)
from .lp import (
    LPColumn,
    LPIterationLimit,
    LPSolution,
    check_lp_solution,
    full_enumeration_lp,
    lp_solution_to_json,
    plug_back_usage,
    solve_expected_lp,
    usage_matrix,
)
from .model import (
    INFINITE,
    OUTSIDE,
    ConsumerType,
    DurationDist,
    ExplicitTable,
    FeasibleFamily,
    Instance,
    MNL,
    choice_prob,
    instance_from_json,
    instance_to_json,
    load_instance,
    offline_oracle,
    save_instance,
)
from .policies import KINDS, Policy, estimate_future_revenue, prepare
from .sampling import enumerate_sample_distribution, sub_assortment_sample
from .sim import (
    EpisodeResult,
    InventoryState,
    MCStats,
    clairvoyant_offline_ec21,
    monte_carlo,
    run_episode,
)

__version__ = "0.1.0"

__all__ = [
    "NO_RENTAL",
    "RENTAL",
    "INFINITE",
    "OUTSIDE",
    "KINDS",
    "ConsumerType",
    "DurationDist",
    "EpisodeResult",
    "ExplicitTable",
    "FeasibleFamily",
    "Instance",
    "InventoryState",
    "LPColumn",
    "LPIterationLimit",
    "LPSolution",
    "MCStats",
    "MNL",
    "Policy",
    "ValueTables",
    "build_tables",
    "check_lp_solution",
    "choice_prob",
    "clairvoyant_offline_ec21",
    "ec21_lp_value",
    "enumerate_sample_distribution",
    "epsilon_star",
    "estimate_future_revenue",
    "full_enumeration_lp",
    "gen_ec21",
    "gen_ec8",
    "gen_footnote9",
    "hybrid_ratio",
    "instance_from_json",
    "instance_to_json",
    "inventory_dp",
    "load_instance",
    "lp_solution_to_json",
    "monte_carlo",
    "offline_oracle",
    "optimistic_dp",
    "plug_back_usage",
    "prepare",
    "run_episode",
    "save_instance",
    "solve_expected_lp",
    "sub_assortment_sample",
    "usage_matrix",
]

"""Fairness-aware combinatorial double auction simulator and solver.

A library for simulating multi-round cloud-resource markets in which many
consumers and providers trade bundles of heterogeneous resources through an
auctioneer.  Winner determination maximizes total utility plus a
history-based fairness term; trades settle at midpoint prices; repeated
losers are boosted before they abandon the market.
"""

from .engine import (
    EngineConfig,
    Repository,
    previous_outcomes,
    repository_from_json,
    repository_to_json,
    run_round,
    run_simulation,
    update_repository,
)
from .fairness import (
    FairnessOutcome,
    compute_fairness_factors,
    eval_fun,
    fun_l,
    fun_w,
    prob_l,
    prob_w,
)
from .metrics import (
    PerRoundRow,
    RunMetrics,
    SimulationReport,
    aggregate,
    emit,
    parse_report,
    report_to_json,
    utilization_percent,
    win_percent,
)
from .model import (
    Allocation,
    ConsumerBid,
    ExtendedConsumerBid,
    FairnessParams,
    MarketShape,
    Money,
    ParticipantRecord,
    ProviderBid,
    RoundResult,
    as_money,
    budget,
)
from .pricing import Settlement, settle, trade_price_unit
from .scenario import ScenarioConfig, generate_consumer_bids, generate_provider_bids
from .wdp_solver import (
    SolverLimits,
    WdpInstance,
    WdpSolution,
    compatible,
    dump_instance,
    load_instance,
    min_cost_allocation,
    objective_value,
    solve_exact,
    solve_heuristic,
    solve_oracle,
    validate_solution,
)

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "ConsumerBid",
    "EngineConfig",
    "ExtendedConsumerBid",
    "FairnessOutcome",
    "FairnessParams",
    "MarketShape",
    "Money",
    "ParticipantRecord",
    "PerRoundRow",
    "ProviderBid",
    "Repository",
    "RoundResult",
    "RunMetrics",
    "ScenarioConfig",
    "Settlement",
    "SimulationReport",
    "SolverLimits",
    "WdpInstance",
    "WdpSolution",
    "aggregate",
    "as_money",
    "budget",
    "compatible",
    "compute_fairness_factors",
    "dump_instance",
    "emit",
    "eval_fun",
    "fun_l",
    "fun_w",
    "generate_consumer_bids",
    "generate_provider_bids",
    "load_instance",
    "min_cost_allocation",
    "objective_value",
    "parse_report",
    "previous_outcomes",
    "prob_l",
    "prob_w",
    "report_to_json",
    "repository_from_json",
    "repository_to_json",
    "run_round",
    "run_simulation",
    "settle",
    "solve_exact",
    "solve_heuristic",
    "solve_oracle",
    "trade_price_unit",
    "update_repository",
    "utilization_percent",
    "validate_solution",
    "win_percent",
]

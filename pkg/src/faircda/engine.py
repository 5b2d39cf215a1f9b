"""Multi-round auction orchestration.

Each round: collect bids, extend consumer bids with fairness factors (zero
in the baseline model or in round one), determine winners, settle at
midpoint prices, and record who won, who lost, and who dropped out.  The
repository of participation records evolves as a pure fold over round
results, so a run is replayable from its round log.

Randomness is split into two independent streams per run — one for bid
generation, one for fairness draws — both derived deterministically from
the master seed and run index.  Bids are generated for every consumer each
round and dropped consumers are filtered out afterwards, so a fairness-on
and a fairness-off simulation with the same master seed see identical bid
streams (common random numbers), whatever their drop histories.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping, Optional, Sequence

import numpy as np

from . import metrics
from .fairness import Outcome, compute_fairness_factors
from .model import (
    ConsumerBid,
    ExtendedConsumerBid,
    FairnessParams,
    Money,
    ParticipantRecord,
    ProviderBid,
    RoundResult,
)
from .pricing import settle
from .scenario import ScenarioConfig, generate_consumer_bids, generate_provider_bids
from .wdp_solver import (
    SolverLimits,
    WdpInstance,
    solve_exact,
    solve_heuristic,
    solve_oracle,
)

__all__ = [
    "Repository",
    "EngineConfig",
    "run_round",
    "update_repository",
    "run_simulation",
    "previous_outcomes",
    "repository_to_dict",
    "repository_from_dict",
    "repository_to_json",
    "repository_from_json",
]

SOLVER_MODES = ("exact", "heuristic", "oracle")


@dataclass(frozen=True)
class Repository:
    """Participation records for every consumer ever seen, plus the round count."""

    records: dict[int, ParticipantRecord] = field(default_factory=dict)
    round_counter: int = 0

    def record(self, consumer_id: int) -> ParticipantRecord:
        try:
            return self.records[consumer_id]
        except KeyError:
            raise ValueError(f"no participation record for consumer {consumer_id}") from None

    def active_ids(self) -> list[int]:
        return sorted(cid for cid, rec in self.records.items() if not rec.dropped)

    def dropped_ids(self) -> list[int]:
        return sorted(cid for cid, rec in self.records.items() if rec.dropped)

    @classmethod
    def fresh(cls, consumer_ids: Sequence[int]) -> "Repository":
        return cls(records={cid: ParticipantRecord() for cid in sorted(consumer_ids)})


@dataclass(frozen=True)
class EngineConfig:
    """Knobs of one simulation: fairness switch, solver, length, and seed."""

    fairness_enabled: bool = True
    fairness_params: FairnessParams = field(default_factory=FairnessParams)
    solver_mode: str = "heuristic"
    solver_limits: SolverLimits = field(default_factory=SolverLimits)
    rounds: int = 100
    master_seed: int = 0

    def __post_init__(self):
        if self.solver_mode not in SOLVER_MODES:
            raise ValueError(
                f"solver_mode must be one of {SOLVER_MODES}, got {self.solver_mode!r}"
            )
        if not isinstance(self.rounds, int) or self.rounds < 1:
            raise ValueError(f"rounds must be a positive integer, got {self.rounds!r}")
        if not isinstance(self.master_seed, int) or self.master_seed < 0:
            raise ValueError(
                f"master_seed must be a non-negative integer, got {self.master_seed!r}"
            )


def previous_outcomes(repo: Repository, participants: Sequence[int]) -> dict[int, Outcome]:
    """Reconstruct each participant's previous-round outcome from their record.

    Active consumers bid every round, so a record with no history means the
    consumer is new ("absent"), a positive losing streak means they lost the
    previous round, and a zero streak with history means they won it.
    """
    outcomes: dict[int, Outcome] = {}
    for cid in participants:
        rec = repo.record(cid)
        if rec.wins + rec.losses == 0:
            outcomes[cid] = "absent"
        elif rec.consecutive_losses > 0:
            outcomes[cid] = "lost"
        else:
            outcomes[cid] = "won"
    return outcomes


def _market_mean_prices(consumer_bids: Sequence[ConsumerBid]) -> list[Money]:
    num_types = consumer_bids[0].num_types
    means = []
    for l in range(num_types):
        total = sum((bid.unit_prices[l] for bid in consumer_bids), Fraction(0))
        means.append(total / len(consumer_bids))
    return means


_SOLVERS = {
    "heuristic": lambda instance, limits: solve_heuristic(instance),
    "oracle": lambda instance, limits: solve_oracle(instance),
    "exact": lambda instance, limits: solve_exact(instance, limits),
}


def run_round(
    repo: Repository,
    consumer_bids: Sequence[ConsumerBid],
    provider_bids: Sequence[ProviderBid],
    config: EngineConfig,
    rng: np.random.Generator,
) -> RoundResult:
    """Clear one auction round; the repository itself is not modified.

    Fairness factors are all zero when fairness is disabled (and in round
    one, when nobody has history).  ``rng`` feeds only the fairness draws.
    Bids from dropped consumers are rejected.  With no participants at all
    the round degenerates to an empty clearing with a winning rate of zero.
    """
    round_index = repo.round_counter + 1
    consumer_bids = sorted(consumer_bids, key=lambda b: b.consumer_id)
    provider_bids = sorted(provider_bids, key=lambda b: b.provider_id)
    participants = [b.consumer_id for b in consumer_bids]
    if len(set(participants)) != len(participants):
        raise ValueError("duplicate consumer ids in this round's bids")
    for cid in participants:
        if repo.record(cid).dropped:
            raise ValueError(f"consumer {cid} dropped out and can no longer bid")

    params = config.fairness_params
    if config.fairness_enabled and consumer_bids:
        outcome_map = previous_outcomes(repo, participants)
        factors = compute_fairness_factors(
            repo,
            participants,
            outcome_map,
            _market_mean_prices(consumer_bids),
            params,
            rng,
        ).factors
    else:
        factors = {}

    ext_bids = [
        ExtendedConsumerBid(bid=b, fairness_factor=factors.get(b.consumer_id, Fraction(0)))
        for b in consumer_bids
    ]
    num_types = (
        consumer_bids[0].num_types if consumer_bids
        else provider_bids[0].num_types if provider_bids
        else 0
    )
    instance = WdpInstance.from_bids(ext_bids, provider_bids, num_resource_types=num_types)
    solution = _SOLVERS[config.solver_mode](instance, config.solver_limits)
    settlement = settle(instance, solution.allocation)

    winner_ids = {
        bid.consumer_id
        for bid, won in zip(consumer_bids, solution.allocation.winners)
        if won
    }
    drops = tuple(
        cid
        for cid in participants
        if cid not in winner_ids
        and repo.record(cid).consecutive_losses + 1 > params.max_losses
    )
    win_rate = (
        metrics.win_rate_percent(len(winner_ids), len(participants)) if participants else 0.0
    )
    return RoundResult(
        round_index=round_index,
        allocation=solution.allocation,
        unit_trade_prices=settlement.unit_trade_prices,
        consumer_payments=settlement.consumer_payments,
        provider_receipts=settlement.provider_receipts,
        consumer_utilities=settlement.consumer_utilities,
        provider_utilities=settlement.provider_utilities,
        total_utility=solution.total_utility,
        total_satisfaction=solution.total_satisfaction,
        utilization_percent=metrics.utilization_from_units(
            solution.allocation.units_sold(), metrics.units_offered(provider_bids)
        ),
        win_percent=win_rate,
        drops_this_round=drops,
        offered_prices={b.consumer_id: b.unit_prices for b in consumer_bids},
    )


def update_repository(
    repo: Repository, result: RoundResult, participants: Sequence[int]
) -> Repository:
    """Fold one round result into the repository, returning the successor.

    Winners gain a win and reset their streak; losers gain a loss and extend
    it; everyone's offered prices are appended to their history; consumers
    listed in ``result.drops_this_round`` are marked dropped at this round.
    """
    if result.round_index != repo.round_counter + 1:
        raise ValueError(
            f"round result {result.round_index} cannot follow round {repo.round_counter}"
        )
    winner_ids = set(result.winner_ids)
    records = dict(repo.records)
    for cid in sorted(set(participants)):
        rec = records.get(cid, ParticipantRecord())
        offered = result.offered_prices.get(cid)
        if offered is None:
            raise ValueError(f"round result has no offered prices for participant {cid}")
        records[cid] = rec.after_win(offered) if cid in winner_ids else rec.after_loss(offered)
    for cid in result.drops_this_round:
        records[cid] = records[cid].marked_dropped(result.round_index)
    return Repository(records=records, round_counter=result.round_index)


def _bid_rng(master_seed: int, run_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(run_index, 0)))


def _fairness_rng(master_seed: int, run_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(run_index, 1)))


def _simulate_one_run(
    scenario: ScenarioConfig, config: EngineConfig, run_index: int
) -> tuple[list[RoundResult], Repository]:
    rng_bids = _bid_rng(config.master_seed, run_index)
    rng_fair = _fairness_rng(config.master_seed, run_index)
    repo = Repository.fresh(range(scenario.shape.num_consumers))
    previous_prices: Optional[dict[int, tuple[Money, ...]]] = None
    results: list[RoundResult] = []
    for round_index in range(1, config.rounds + 1):
        provider_bids = generate_provider_bids(scenario, rng_bids)
        all_bids = generate_consumer_bids(scenario, rng_bids, round_index, previous_prices)
        previous_prices = {b.consumer_id: b.unit_prices for b in all_bids}
        active = [b for b in all_bids if not repo.record(b.consumer_id).dropped]
        result = run_round(repo, active, provider_bids, config, rng_fair)
        repo = update_repository(repo, result, [b.consumer_id for b in active])
        results.append(result)
    return results, repo


def _simulate_star(args: tuple) -> tuple[list[RoundResult], Repository]:
    return _simulate_one_run(*args)


def config_echo(scenario: ScenarioConfig, config: EngineConfig) -> dict:
    """JSON-friendly echo of the full configuration (rationals as strings)."""
    return {
        "scenario": {
            "consumers": scenario.shape.num_consumers,
            "providers": scenario.shape.num_providers,
            "resource_types": scenario.shape.num_resource_types,
            "runs": scenario.runs,
            "provider_quantity_range": list(scenario.provider_quantity_range),
            "consumer_quantity_range": list(scenario.consumer_quantity_range),
            "provider_price_range": [str(p) for p in scenario.provider_price_range],
            "consumer_price_range": [str(p) for p in scenario.consumer_price_range],
            "price_drift": str(scenario.price_drift),
        },
        "engine": {
            "fairness_enabled": config.fairness_enabled,
            "solver": config.solver_mode,
            "rounds": config.rounds,
            "master_seed": config.master_seed,
            "node_budget": config.solver_limits.node_budget,
            "time_budget_s": config.solver_limits.time_budget_s,
            "fairness_params": {
                "alpha1": str(config.fairness_params.alpha1),
                "alpha2": str(config.fairness_params.alpha2),
                "beta1": str(config.fairness_params.beta1),
                "beta2": str(config.fairness_params.beta2),
                "max_losses": config.fairness_params.max_losses,
            },
        },
    }


def run_simulation(
    scenario: ScenarioConfig, config: EngineConfig, jobs: int = 1
) -> metrics.SimulationReport:
    """Execute ``scenario.runs`` independent runs of ``config.rounds`` rounds.

    Runs use separate deterministic random streams, so the report is a pure
    function of the two configurations; ``jobs > 1`` executes runs in
    parallel worker processes without changing the result.
    """
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs}")
    tasks = [(scenario, config, run) for run in range(scenario.runs)]
    if jobs == 1 or scenario.runs == 1:
        outcomes = [_simulate_one_run(*task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, scenario.runs)) as pool:
            outcomes = list(pool.map(_simulate_star, tasks))
    per_round: list[metrics.PerRoundRow] = []
    per_run: list[metrics.RunMetrics] = []
    repositories: list[dict] = []
    for run_index, (results, repo) in enumerate(outcomes):
        per_round.extend(metrics.per_round_rows(run_index, results))
        per_run.append(metrics.aggregate(results, repo, run=run_index))
        repositories.append(repository_to_dict(repo))
    return metrics.SimulationReport(
        per_round=tuple(per_round),
        per_run=tuple(per_run),
        config_echo=config_echo(scenario, config),
        final_repositories=tuple(repositories),
    )


def baseline_config(config: EngineConfig) -> EngineConfig:
    """The same engine with the fairness mechanism switched off."""
    return replace(config, fairness_enabled=False)


def repository_to_dict(repo: Repository) -> dict:
    return {
        "round_counter": repo.round_counter,
        "records": {
            str(cid): {
                "wins": rec.wins,
                "losses": rec.losses,
                "consecutive_losses": rec.consecutive_losses,
                "dropped_at_round": rec.dropped_at_round,
                "price_history": [[str(p) for p in entry] for entry in rec.price_history],
            }
            for cid, rec in sorted(repo.records.items())
        },
    }


def repository_from_dict(payload: Mapping) -> Repository:
    records = {}
    for cid, fields in payload["records"].items():
        records[int(cid)] = ParticipantRecord(
            wins=fields["wins"],
            losses=fields["losses"],
            consecutive_losses=fields["consecutive_losses"],
            dropped_at_round=fields["dropped_at_round"],
            price_history=tuple(
                tuple(Fraction(p) for p in entry) for entry in fields["price_history"]
            ),
        )
    return Repository(records=records, round_counter=payload["round_counter"])


def repository_to_json(repo: Repository) -> str:
    """Repository snapshot as structured text, for resumable experiments."""
    return json.dumps(repository_to_dict(repo), indent=2, sort_keys=True) + "\n"


def repository_from_json(text: str) -> Repository:
    return repository_from_dict(json.loads(text))

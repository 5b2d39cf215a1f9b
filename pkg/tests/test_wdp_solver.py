"""Winner determination: examples, invariants, and brute-force cross-checks.

The inner routing is checked against an exhaustive enumeration of integer
transfer matrices (see ``oracles.py``, independent of the library's
greedy); the branch-and-bound solver is checked against subset enumeration.
"""

from fractions import Fraction

import numpy as np
import pytest
from oracles import brute_force_min_cost, transfer_cost

from faircda.cli import random_micro_instance, run_validation_corpus
from faircda.model import (
    Allocation,
    ConsumerBid,
    ExtendedConsumerBid,
    MarketShape,
    ProviderBid,
)
from faircda.wdp_solver import (
    SolverLimits,
    WdpInstance,
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


def consumer(cid, prices, quantities, ff=0):
    return ExtendedConsumerBid(
        bid=ConsumerBid(cid, tuple(Fraction(p) for p in prices), tuple(quantities)),
        fairness_factor=Fraction(ff),
    )


def provider(pid, prices, quantities):
    return ProviderBid(pid, tuple(Fraction(p) for p in prices), tuple(quantities))


def instance(consumers, providers):
    return WdpInstance.from_bids(consumers, providers)


class TestCompatible:
    def test_consumer_above_ask(self):
        assert compatible(Fraction(10), Fraction(5))

    def test_equality_boundary(self):
        assert compatible(Fraction(5), Fraction(5))

    def test_consumer_below_ask(self):
        assert not compatible(Fraction(4), Fraction(5))


class TestWdpInstance:
    def test_budget_mismatch_rejected(self):
        c = consumer(0, [10], [1])
        with pytest.raises(ValueError, match="budget"):
            WdpInstance(
                shape=MarketShape(1, 1, 1),
                consumer_bids=(c,),
                provider_bids=(provider(0, [5], [1]),),
                budgets=(Fraction(99),),
            )

    def test_duplicate_consumer_ids_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            instance([consumer(0, [10], [1]), consumer(0, [8], [1])], [provider(0, [5], [2])])

    def test_type_count_mismatch_rejected(self):
        with pytest.raises(ValueError, match="resource types"):
            instance([consumer(0, [10, 10], [1, 1])], [provider(0, [5], [1])])


class TestObjectiveValue:
    def test_empty_allocation(self):
        inst = instance([consumer(0, [10], [1])], [provider(0, [5], [1])])
        empty = Allocation.empty(inst.shape)
        assert objective_value(inst, empty) == (0, 0, 0)

    def test_single_trade(self):
        inst = instance([consumer(0, [10], [1])], [provider(0, [5], [1])])
        alloc = Allocation(winners=(True,), transfers=np.array([[[1]]]))
        assert objective_value(inst, alloc) == (5, 5, 0)

    def test_fairness_factor_adds_satisfaction(self):
        inst = instance([consumer(0, [10], [1], ff=3)], [provider(0, [5], [1])])
        alloc = Allocation(winners=(True,), transfers=np.array([[[1]]]))
        assert objective_value(inst, alloc) == (8, 5, 3)

    def test_infeasible_allocation_rejected_with_details(self):
        inst = instance([consumer(0, [10], [1])], [provider(0, [5], [1])])
        bad = Allocation(winners=(True,), transfers=np.zeros((1, 1, 1), dtype=np.int64))
        with pytest.raises(ValueError, match="demand exactness"):
            objective_value(inst, bad)


class TestMinCostAllocation:
    def test_no_winners_costs_nothing(self):
        inst = instance([consumer(0, [10], [1])], [provider(0, [5], [1])])
        y = min_cost_allocation(inst, set())
        assert y is not None and y.sum() == 0

    def test_splits_across_providers_cheapest_first(self):
        inst = instance(
            [consumer(0, [10], [2])],
            [provider(0, [5], [1]), provider(1, [7], [5])],
        )
        y = min_cost_allocation(inst, {0})
        assert y is not None
        assert y[0, 0, 0] == 1 and y[0, 0, 1] == 1
        assert transfer_cost(inst, y) == 12

    def test_incompatible_demand_is_infeasible(self):
        inst = instance([consumer(0, [6], [1])], [provider(0, [7], [5])])
        assert min_cost_allocation(inst, {0}) is None

    def test_unknown_winner_id_rejected(self):
        inst = instance([consumer(0, [10], [1])], [provider(0, [5], [1])])
        with pytest.raises(ValueError, match="not part"):
            min_cost_allocation(inst, {3})

    def test_matches_brute_force_on_micro_corpus(self):
        rng = np.random.default_rng(99)
        feasible = infeasible = 0
        for _ in range(80):
            inst = random_micro_instance(rng)
            positions = [
                n for n in range(inst.shape.num_consumers) if rng.random() < 0.6
            ]
            ids = [inst.consumer_bids[n].consumer_id for n in positions]
            y = min_cost_allocation(inst, ids)
            expected = brute_force_min_cost(inst, positions)
            if expected is None:
                assert y is None
                infeasible += 1
            else:
                assert y is not None
                assert transfer_cost(inst, y) == expected
                feasible += 1
        assert feasible and infeasible  # both behaviors exercised


def ab_competition():
    """Two consumers, one unit of supply: fairness overrides raw budget."""
    return instance(
        [consumer(0, [10], [1], ff=0), consumer(1, [8], [1], ff=5)],
        [provider(0, [5], [1])],
    )


class TestSolveExact:
    def test_single_profitable_trade(self):
        inst = instance([consumer(0, [10], [1])], [provider(0, [5], [1])])
        sol = solve_exact(inst)
        assert sol.allocation.winners == (True,)
        assert sol.objective == 5 and sol.optimality == "proved_optimal"
        assert sol.gap_bound == 0

    def test_priced_out_market_clears_empty(self):
        inst = instance([consumer(0, [4], [1])], [provider(0, [5], [1])])
        sol = solve_exact(inst)
        assert sol.allocation.winners == (False,)
        assert sol.objective == 0 and sol.optimality == "proved_optimal"

    def test_fairness_factor_flips_the_winner(self):
        sol = solve_exact(ab_competition())
        assert sol.allocation.winners == (False, True)
        assert sol.objective == 8

    def test_tie_prefers_lexicographically_smallest_winner_vector(self):
        inst = instance(
            [consumer(0, [10], [1]), consumer(1, [10], [1])],
            [provider(0, [5], [1])],
        )
        for solver in (solve_exact, solve_oracle):
            sol = solver(inst)
            assert sol.allocation.winners == (False, True)

    def test_limit_validation(self):
        with pytest.raises(ValueError, match="node_budget"):
            SolverLimits(node_budget=0)
        with pytest.raises(ValueError, match="time_budget_s"):
            SolverLimits(time_budget_s=0)

    def test_truncated_search_reports_valid_gap(self):
        inst = instance(
            [consumer(0, [10], [1]), consumer(1, [9], [1])],
            [provider(0, [5], [2])],
        )
        optimal = solve_exact(inst)
        truncated = solve_exact(inst, SolverLimits(node_budget=1))
        assert truncated.optimality == "heuristic"
        assert truncated.objective + truncated.gap_bound >= optimal.objective
        assert validate_solution(inst, truncated.allocation) == []


class TestSolveOracle:
    def test_agrees_with_exact_on_worked_examples(self):
        for inst in (
            instance([consumer(0, [10], [1])], [provider(0, [5], [1])]),
            instance([consumer(0, [4], [1])], [provider(0, [5], [1])]),
            ab_competition(),
        ):
            assert solve_oracle(inst).objective == solve_exact(inst).objective

    def test_empty_market_edge(self):
        inst = WdpInstance(
            shape=MarketShape(0, 1, 1),
            consumer_bids=(),
            provider_bids=(provider(0, [5], [1]),),
            budgets=(),
        )
        sol = solve_oracle(inst)
        assert sol.objective == 0 and sol.allocation.winners == ()

    def test_large_instance_guard(self):
        consumers = [consumer(n, [10], [1]) for n in range(13)]
        inst = instance(consumers, [provider(0, [5], [20])])
        with pytest.raises(ValueError, match="limited"):
            solve_oracle(inst)


class TestSolveHeuristic:
    def test_admits_everyone_when_supply_allows(self):
        inst = instance(
            [consumer(0, [10], [1]), consumer(1, [9], [2])],
            [provider(0, [5], [10])],
        )
        sol = solve_heuristic(inst)
        assert sol.allocation.winners == (True, True)
        assert sol.objective == solve_oracle(inst).objective

    def test_fairness_ranking_prefers_boosted_consumer(self):
        sol = solve_heuristic(ab_competition())
        assert sol.allocation.winners == (False, True)

    def test_empty_instance(self):
        inst = WdpInstance(
            shape=MarketShape(0, 1, 1),
            consumer_bids=(),
            provider_bids=(provider(0, [5], [1]),),
            budgets=(),
        )
        sol = solve_heuristic(inst)
        assert sol.objective == 0 and sol.allocation.winners == ()

    def test_never_beats_exact_and_validates_clean(self):
        rng = np.random.default_rng(7)
        for _ in range(60):
            inst = random_micro_instance(rng)
            heur = solve_heuristic(inst)
            exact = solve_exact(inst)
            assert heur.objective <= exact.objective
            assert validate_solution(inst, heur.allocation) == []
            assert heur.gap_bound >= exact.objective - heur.objective


class TestValidateSolution:
    def test_solver_outputs_are_clean(self):
        rng = np.random.default_rng(21)
        for _ in range(25):
            inst = random_micro_instance(rng)
            for solver in (solve_exact, solve_heuristic):
                assert validate_solution(inst, solver(inst).allocation) == []

    def test_winner_without_units_reports_linkage_and_demand(self):
        inst = instance([consumer(0, [10], [1])], [provider(0, [5], [1])])
        bad = Allocation(winners=(True,), transfers=np.zeros((1, 1, 1), dtype=np.int64))
        messages = "\n".join(validate_solution(inst, bad))
        assert "linkage upper" in messages
        assert "demand exactness" in messages

    def test_oversold_supply_reported(self):
        inst = instance([consumer(0, [10], [2])], [provider(0, [5], [1])])
        bad = Allocation(winners=(True,), transfers=np.array([[[2]]]))
        messages = "\n".join(validate_solution(inst, bad))
        assert "supply" in messages

    def test_loser_with_units_reports_linkage_lower(self):
        inst = instance([consumer(0, [10], [1])], [provider(0, [5], [1])])
        bad = Allocation(winners=(False,), transfers=np.array([[[1]]]))
        messages = "\n".join(validate_solution(inst, bad))
        assert "linkage lower" in messages

    def test_incompatible_trade_reported(self):
        inst = instance([consumer(0, [4], [1])], [provider(0, [5], [1])])
        bad = Allocation(winners=(True,), transfers=np.array([[[1]]]))
        messages = "\n".join(validate_solution(inst, bad))
        assert "price compatibility" in messages

    def test_shape_mismatch_is_an_error_not_a_violation(self):
        inst = instance([consumer(0, [10], [1])], [provider(0, [5], [1])])
        alien = Allocation(winners=(True, False), transfers=np.zeros((2, 1, 1), dtype=np.int64))
        with pytest.raises(ValueError, match="shape"):
            validate_solution(inst, alien)


class TestSolverProperties:
    def test_oracle_equivalence_on_seeded_corpus(self):
        passes, failures = run_validation_corpus(count=120, seed=5)
        assert failures == [] and passes == 120

    def test_objective_decomposes_into_value_minus_service_cost(self):
        rng = np.random.default_rng(31)
        for _ in range(40):
            inst = random_micro_instance(rng)
            sol = solve_exact(inst)
            winners = sol.winner_positions
            value = sum(
                (inst.budgets[n] + inst.consumer_bids[n].fairness_factor for n in winners),
                Fraction(0),
            )
            assert sol.objective == value - brute_force_min_cost(inst, winners)

    def test_fairness_threshold_flips_the_argmax(self):
        winners_by_factor = []
        for ff in range(0, 6):
            inst = instance(
                [consumer(0, [10], [1], ff=0), consumer(1, [8], [1], ff=ff)],
                [provider(0, [5], [1])],
            )
            winners_by_factor.append(solve_exact(inst).allocation.winners)
        # Low factors leave the high-budget consumer on top; beyond the
        # threshold the boosted consumer is the unique winner, and stays so.
        assert winners_by_factor[0] == (True, False)
        flip = winners_by_factor.index((False, True))
        assert all(w == (False, True) for w in winners_by_factor[flip:])


class TestDumpLoad:
    def test_round_trips_bit_exactly(self):
        rng = np.random.default_rng(17)
        for _ in range(25):
            inst = random_micro_instance(rng)
            assert load_instance(dump_instance(inst)) == inst

    def test_fractional_values_survive(self):
        inst = instance(
            [consumer(0, ["7/3", "1/2"], [1, 2], ff="-5/4")],
            [provider(0, ["3/2", "0"], [4, 0])],
        )
        again = load_instance(dump_instance(inst))
        assert again == inst
        assert again.consumer_bids[0].fairness_factor == Fraction(-5, 4)

    def test_missing_market_record_rejected(self):
        with pytest.raises(ValueError, match="market"):
            load_instance("consumer 0 ff=0 prices=1 quantities=1\n")

    def test_malformed_record_reports_line(self):
        with pytest.raises(ValueError, match="line 2"):
            load_instance("market 1 1 1\nconsumer 0 prices=1\n")

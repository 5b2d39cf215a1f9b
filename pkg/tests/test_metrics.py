"""Metric formulas, aggregation, and deterministic emission."""

from fractions import Fraction

import numpy as np
import pytest

from faircda.engine import Repository
from faircda.metrics import (
    PER_ROUND_FIELDS,
    PER_RUN_FIELDS,
    RunMetrics,
    SimulationReport,
    aggregate,
    emit,
    parse_report,
    per_round_rows,
    report_to_json,
    units_offered,
    utilization_percent,
    win_percent,
)
from faircda.model import (
    Allocation,
    ParticipantRecord,
    ProviderBid,
    RoundResult,
)


def make_result(round_index=1, units=0, winners=0, participants=3,
                total_utility=0, satisfaction=0, drops=()):
    """Minimal RoundResult for metric arithmetic: one consumer slot per participant."""
    n = max(participants, 1)
    transfers = np.zeros((n, 1, 1), dtype=np.int64)
    flags = [False] * n
    for i in range(winners):
        flags[i] = True
        transfers[i, 0, 0] = 1
    # Park any extra sold units on the first winner.
    if units > winners and winners:
        transfers[0, 0, 0] += units - winners
    prices = {i: (Fraction(1),) for i in range(participants)}
    return RoundResult(
        round_index=round_index,
        allocation=Allocation(winners=tuple(flags), transfers=transfers),
        unit_trade_prices={},
        consumer_payments={},
        provider_receipts={},
        consumer_utilities={},
        provider_utilities={},
        total_utility=Fraction(total_utility),
        total_satisfaction=Fraction(satisfaction),
        utilization_percent=0.0,
        win_percent=0.0,
        drops_this_round=tuple(drops),
        offered_prices=prices,
    )


OFFERS = [ProviderBid(0, (Fraction(5),), (10,))]


class TestUtilization:
    def test_partial(self):
        assert utilization_percent(make_result(units=4, winners=1), OFFERS) == 40.0

    def test_nothing_sold(self):
        assert utilization_percent(make_result(units=0), OFFERS) == 0.0

    def test_everything_sold(self):
        assert utilization_percent(make_result(units=10, winners=1), OFFERS) == 100.0

    def test_zero_offer_is_an_error(self):
        empty = [ProviderBid(0, (Fraction(5),), (0,))]
        with pytest.raises(ValueError, match="no units"):
            utilization_percent(make_result(), empty)

    def test_units_offered_sums_everything(self):
        offers = [
            ProviderBid(0, (Fraction(5), Fraction(6)), (3, 4)),
            ProviderBid(1, (Fraction(7), Fraction(8)), (0, 2)),
        ]
        assert units_offered(offers) == 9


class TestWinPercent:
    def test_ratio(self):
        assert win_percent(make_result(winners=1, participants=10), range(10)) == 10.0

    def test_everyone_wins(self):
        assert win_percent(make_result(winners=3, participants=3), range(3)) == 100.0

    def test_nobody_wins(self):
        assert win_percent(make_result(winners=0, participants=3), range(3)) == 0.0

    def test_no_participants_is_an_error(self):
        with pytest.raises(ValueError, match="participants"):
            win_percent(make_result(), [])


class TestAggregate:
    def test_no_drops_reports_absent_mean(self):
        repo = Repository.fresh([0, 1])
        row = aggregate([make_result(total_utility=5)], repo, run=0)
        assert row.drops == 0 and row.mean_drop_round is None

    def test_mean_drop_round(self):
        repo = Repository(
            records={
                0: ParticipantRecord(losses=10, consecutive_losses=7).marked_dropped(10),
                1: ParticipantRecord(losses=20, consecutive_losses=7).marked_dropped(20),
                2: ParticipantRecord(),
            }
        )
        row = aggregate([make_result()], repo, run=0)
        assert row.drops == 2 and row.mean_drop_round == 15.0

    def test_utility_sums_exactly(self):
        repo = Repository.fresh([0])
        rounds = [make_result(1, total_utility=5), make_result(2, total_utility=7)]
        assert aggregate(rounds, repo).total_utility == 12


class TestPerRoundRows:
    def test_cumulative_drops_monotone(self):
        rounds = [
            make_result(1, drops=(4,)),
            make_result(2),
            make_result(3, drops=(5, 6)),
        ]
        rows = per_round_rows(0, rounds)
        assert [r.cumulative_drops for r in rows] == [1, 1, 3]


def tiny_report():
    rounds = [
        make_result(1, units=4, winners=1, total_utility=5, drops=(2,)),
        make_result(2, units=2, winners=1, total_utility=7),
    ]
    repo = Repository(
        records={
            0: ParticipantRecord(wins=2),
            2: ParticipantRecord(losses=1, consecutive_losses=1).marked_dropped(1),
        },
        round_counter=2,
    )
    rows = per_round_rows(0, rounds)
    return SimulationReport(
        per_round=tuple(rows),
        per_run=(aggregate(rounds, repo, run=0),),
        config_echo={"engine": {"rounds": 2}},
        final_repositories=(),
    )


class TestEmit:
    def test_headers_are_the_public_contract(self, tmp_path):
        report = SimulationReport(per_round=(), per_run=())
        per_round, per_run, _ = emit(report, tmp_path)
        assert per_round.read_text() == ",".join(PER_ROUND_FIELDS) + "\n"
        assert per_run.read_text() == ",".join(PER_RUN_FIELDS) + "\n"

    def test_emission_is_byte_identical(self, tmp_path):
        report = tiny_report()
        first = {p.name: p.read_bytes() for p in emit(report, tmp_path / "a")}
        second = {p.name: p.read_bytes() for p in emit(report, tmp_path / "b")}
        assert first == second

    def test_json_round_trip(self):
        report = tiny_report()
        assert parse_report(report_to_json(report)) == report

    def test_emitted_json_parses_back(self, tmp_path):
        report = tiny_report()
        _, _, json_path = emit(report, tmp_path)
        assert parse_report(json_path.read_text()) == report

    def test_inconsistent_aggregates_refuse_to_emit(self, tmp_path):
        report = tiny_report()
        broken = SimulationReport(
            per_round=report.per_round,
            per_run=(RunMetrics(run=0, total_utility=Fraction(999), drops=1,
                                mean_drop_round=1.0, mean_utilization=0.0,
                                mean_win_percent=0.0),),
            config_echo=report.config_echo,
        )
        with pytest.raises(ValueError, match="total utility"):
            emit(broken, tmp_path)

    def test_absent_mean_drop_round_is_empty_cell(self, tmp_path):
        rounds = [make_result(1, total_utility=1)]
        report = SimulationReport(
            per_round=tuple(per_round_rows(0, rounds)),
            per_run=(aggregate(rounds, Repository.fresh([0]), run=0),),
        )
        _, per_run, _ = emit(report, tmp_path)
        line = per_run.read_text().splitlines()[1]
        assert line.split(",")[PER_RUN_FIELDS.index("mean_drop_round")] == ""

    def test_io_failure_names_the_destination(self, tmp_path):
        blocker = tmp_path / "not_a_dir"
        blocker.write_text("file in the way")
        with pytest.raises(OSError, match="not_a_dir"):
            emit(tiny_report(), blocker)

    def test_full_simulation_report_round_trips(self):
        from faircda.engine import EngineConfig, run_simulation
        from faircda.scenario import ScenarioConfig
        from faircda.model import MarketShape

        report = run_simulation(
            ScenarioConfig(shape=MarketShape(8, 2, 2), runs=2),
            EngineConfig(rounds=4, master_seed=1),
        )
        assert parse_report(report_to_json(report)) == report

"""Evaluation metrics, report assembly, and CSV/JSON emission.

Per-round rows capture total utility, total satisfaction, resource
utilization, the winning rate, and the cumulative drop count; per-run rows
aggregate them.  Utilization is the percentage of offered units actually
sold in a round; the winning rate is the percentage of that round's
participants who won.  Every evaluation series is recoverable from the
emitted ``per_round.csv`` / ``per_run.csv`` with any plotting tool.

Currency values are exact rationals internally and in ``report.json``
(serialized as fraction strings); CSV cells hold their float values for
plotting convenience.  Emission is deterministic: identical reports produce
byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from statistics import fmean
from typing import Iterable, Optional, Sequence

from .model import Money, ProviderBid, RoundResult

__all__ = [
    "PerRoundRow",
    "RunMetrics",
    "SimulationReport",
    "utilization_percent",
    "utilization_from_units",
    "win_percent",
    "win_rate_percent",
    "units_offered",
    "aggregate",
    "per_round_rows",
    "emit",
    "report_to_json",
    "parse_report",
]

PER_ROUND_FIELDS = (
    "run",
    "round",
    "total_utility",
    "total_satisfaction",
    "utilization_percent",
    "win_percent",
    "cumulative_drops",
)
PER_RUN_FIELDS = (
    "run",
    "total_utility",
    "drops",
    "mean_drop_round",
    "mean_utilization",
    "mean_win_percent",
)


@dataclass(frozen=True)
class PerRoundRow:
    run: int
    round: int
    total_utility: Money
    total_satisfaction: Money
    utilization_percent: float
    win_percent: float
    cumulative_drops: int


@dataclass(frozen=True)
class RunMetrics:
    run: int
    total_utility: Money
    drops: int
    mean_drop_round: Optional[float]
    mean_utilization: float
    mean_win_percent: float


@dataclass(frozen=True)
class SimulationReport:
    """Everything one simulation produced, ready for emission.

    ``final_repositories`` holds one plain-dict repository snapshot per run
    (see ``engine.repository_to_dict``), keeping the report JSON-friendly.
    """

    per_round: tuple[PerRoundRow, ...]
    per_run: tuple[RunMetrics, ...]
    config_echo: dict = field(default_factory=dict)
    final_repositories: tuple[dict, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "per_round", tuple(self.per_round))
        object.__setattr__(self, "per_run", tuple(self.per_run))
        object.__setattr__(self, "final_repositories", tuple(self.final_repositories))


def units_offered(provider_bids: Sequence[ProviderBid]) -> int:
    return sum(sum(pb.quantities) for pb in provider_bids)


def utilization_from_units(units_sold: int, offered: int) -> float:
    if offered <= 0:
        raise ValueError("utilization is undefined when no units are offered")
    return 100.0 * units_sold / offered


def utilization_percent(round_result: RoundResult, provider_bids: Sequence[ProviderBid]) -> float:
    """Percentage of this round's offered units that were sold."""
    return utilization_from_units(round_result.allocation.units_sold(), units_offered(provider_bids))


def win_rate_percent(num_winners: int, num_participants: int) -> float:
    if num_participants <= 0:
        raise ValueError("winning percentage is undefined without participants")
    return 100.0 * num_winners / num_participants


def win_percent(round_result: RoundResult, participants: Iterable[int]) -> float:
    """Percentage of this round's participants who won."""
    return win_rate_percent(round_result.allocation.num_winners, len(set(participants)))


def aggregate(rounds: Sequence[RoundResult], repo_final, run: int = 0) -> RunMetrics:
    """Collapse one run into its summary row.

    ``repo_final`` is the repository after the last round (an
    ``engine.Repository`` or a plain id-to-record mapping); drop statistics
    come from its records, everything else from the round results.
    """
    records = getattr(repo_final, "records", repo_final)
    drop_rounds = sorted(
        rec.dropped_at_round for rec in records.values() if rec.dropped_at_round is not None
    )
    return RunMetrics(
        run=run,
        total_utility=sum((r.total_utility for r in rounds), Fraction(0)),
        drops=len(drop_rounds),
        mean_drop_round=fmean(drop_rounds) if drop_rounds else None,
        mean_utilization=fmean(r.utilization_percent for r in rounds) if rounds else 0.0,
        mean_win_percent=fmean(r.win_percent for r in rounds) if rounds else 0.0,
    )


def per_round_rows(run: int, rounds: Sequence[RoundResult]) -> list[PerRoundRow]:
    rows = []
    cumulative = 0
    for result in rounds:
        cumulative += len(result.drops_this_round)
        rows.append(
            PerRoundRow(
                run=run,
                round=result.round_index,
                total_utility=result.total_utility,
                total_satisfaction=result.total_satisfaction,
                utilization_percent=result.utilization_percent,
                win_percent=result.win_percent,
                cumulative_drops=cumulative,
            )
        )
    return rows


def _cross_check(report: SimulationReport) -> None:
    """Per-run rows must be exact aggregates of the per-round rows."""
    for run_row in report.per_run:
        rows = [r for r in report.per_round if r.run == run_row.run]
        recomputed_utility = sum((r.total_utility for r in rows), Fraction(0))
        if recomputed_utility != run_row.total_utility:
            raise ValueError(
                f"run {run_row.run}: per-run total utility {run_row.total_utility} "
                f"!= per-round sum {recomputed_utility}"
            )
        if rows:
            if fmean(r.utilization_percent for r in rows) != run_row.mean_utilization:
                raise ValueError(f"run {run_row.run}: mean utilization mismatch")
            if fmean(r.win_percent for r in rows) != run_row.mean_win_percent:
                raise ValueError(f"run {run_row.run}: mean winning percentage mismatch")
            if rows[-1].cumulative_drops != run_row.drops:
                raise ValueError(
                    f"run {run_row.run}: cumulative drops end at {rows[-1].cumulative_drops} "
                    f"but the run reports {run_row.drops}"
                )


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, Fraction):
        return repr(float(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _rows_to_csv(fields: Sequence[str], rows: Iterable) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        data = asdict(row)
        writer.writerow([_csv_cell(data[f]) for f in fields])
    return buffer.getvalue()


def _money_str(value: Money) -> str:
    return str(Fraction(value))


def report_to_json(report: SimulationReport) -> str:
    payload = {
        "config": report.config_echo,
        "per_round": [
            {
                "run": r.run,
                "round": r.round,
                "total_utility": _money_str(r.total_utility),
                "total_satisfaction": _money_str(r.total_satisfaction),
                "utilization_percent": r.utilization_percent,
                "win_percent": r.win_percent,
                "cumulative_drops": r.cumulative_drops,
            }
            for r in report.per_round
        ],
        "per_run": [
            {
                "run": r.run,
                "total_utility": _money_str(r.total_utility),
                "drops": r.drops,
                "mean_drop_round": r.mean_drop_round,
                "mean_utilization": r.mean_utilization,
                "mean_win_percent": r.mean_win_percent,
            }
            for r in report.per_run
        ],
        "repositories": list(report.final_repositories),
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def parse_report(text: str) -> SimulationReport:
    """Inverse of :func:`report_to_json`: exact round-trip of a report."""
    payload = json.loads(text)
    per_round = tuple(
        PerRoundRow(
            run=row["run"],
            round=row["round"],
            total_utility=Fraction(row["total_utility"]),
            total_satisfaction=Fraction(row["total_satisfaction"]),
            utilization_percent=float(row["utilization_percent"]),
            win_percent=float(row["win_percent"]),
            cumulative_drops=row["cumulative_drops"],
        )
        for row in payload["per_round"]
    )
    per_run = tuple(
        RunMetrics(
            run=row["run"],
            total_utility=Fraction(row["total_utility"]),
            drops=row["drops"],
            mean_drop_round=(
                None if row["mean_drop_round"] is None else float(row["mean_drop_round"])
            ),
            mean_utilization=float(row["mean_utilization"]),
            mean_win_percent=float(row["mean_win_percent"]),
        )
        for row in payload["per_run"]
    )
    return SimulationReport(
        per_round=per_round,
        per_run=per_run,
        config_echo=payload["config"],
        final_repositories=tuple(payload["repositories"]),
    )


def emit(report: SimulationReport, destination) -> list[Path]:
    """Write ``per_round.csv``, ``per_run.csv`` and ``report.json``.

    Row order is run-major then round; column order is part of the public
    contract.  The per-run aggregates are re-derived from the per-round rows
    first and any mismatch aborts the write.
    """
    _cross_check(report)
    dest = Path(destination)
    try:
        dest.mkdir(parents=True, exist_ok=True)
        per_round_path = dest / "per_round.csv"
        per_run_path = dest / "per_run.csv"
        report_path = dest / "report.json"
        ordered_rounds = sorted(report.per_round, key=lambda r: (r.run, r.round))
        ordered_runs = sorted(report.per_run, key=lambda r: r.run)
        per_round_path.write_text(_rows_to_csv(PER_ROUND_FIELDS, ordered_rounds))
        per_run_path.write_text(_rows_to_csv(PER_RUN_FIELDS, ordered_runs))
        report_path.write_text(report_to_json(report))
    except OSError as exc:
        raise OSError(f"cannot write report files under {dest}: {exc}") from exc
    return [per_round_path, per_run_path, report_path]

"""Per-consumer fairness factors from participation history.

A consumer who lost the previous round may receive a positive reward factor
(more likely the longer their losing streak); a consumer who won may receive
a negative penalty factor (more likely the shorter their streak).  The
factor is added to the winner-determination objective when that consumer
wins, so rewards pull persistent losers back into the market and penalties
throttle serial winners.

The reward/penalty magnitudes use the market's loss/win counts and a bid
quality score; the intervention probabilities use the losing-streak length.
The quality score and both probability shapes are policy choices documented
on :func:`eval_fun`, :func:`prob_w` and :func:`prob_l`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal, Mapping, Sequence

from .model import FairnessParams, Money, ParticipantRecord, as_money

__all__ = [
    "Branch",
    "Outcome",
    "FairnessOutcome",
    "eval_fun",
    "fun_w",
    "fun_l",
    "prob_w",
    "prob_l",
    "compute_fairness_factors",
]

Branch = Literal["reward", "penalty", "none"]
Outcome = Literal["won", "lost", "absent"]

_EVAL_FLOOR = Fraction(1, 10)
_EVAL_CEIL = Fraction(10)


@dataclass(frozen=True)
class FairnessOutcome:
    """Factors and the branch applied to each participant this round."""

    factors: dict[int, Money] = field(default_factory=dict)
    applied_branch: dict[int, Branch] = field(default_factory=dict)

    def __post_init__(self):
        for cid, branch in self.applied_branch.items():
            factor = self.factors.get(cid, Fraction(0))
            if branch == "reward" and factor < 0:
                raise ValueError(f"consumer {cid}: reward branch with negative factor {factor}")
            if branch == "penalty" and factor >= 0:
                raise ValueError(f"consumer {cid}: penalty branch with factor {factor} >= 0")
            if branch == "none" and factor != 0:
                raise ValueError(f"consumer {cid}: no branch applied but factor is {factor}")

    def factor(self, consumer_id: int) -> Money:
        return self.factors.get(consumer_id, Fraction(0))


def eval_fun(record: ParticipantRecord, market_mean_prices: Sequence[Money]) -> Money:
    """Bid-quality score: how the consumer's latest prices compare to the market.

    Returns the mean over resource types of (consumer's most recent offered
    unit price / market mean unit price), clamped to [0.1, 10].  A consumer
    with no history yet scores a neutral 1.  Higher offered prices score
    higher, so quality rewards aggressive bidders and the score is free of
    the market's price scale.
    """
    means = [as_money(p) for p in market_mean_prices]
    for l, mean in enumerate(means):
        if mean <= 0:
            raise ValueError(f"market mean price for resource type {l} must be positive, got {mean}")
    last = record.last_offered_prices()
    if last is None:
        return Fraction(1)
    if len(last) != len(means):
        raise ValueError(
            f"price history entry has {len(last)} types but market means have {len(means)}"
        )
    ratio = sum((p / mean for p, mean in zip(last, means)), Fraction(0)) / len(means)
    return min(max(ratio, _EVAL_FLOOR), _EVAL_CEIL)


def fun_w(losses: int, eval: Money, cl: int, params: FairnessParams) -> Money:
    """Reward for a previous-round loser.

    ``(cl + 1) * (alpha1 * losses + alpha2 * eval)``: grows with the total
    loss count, the bid quality, and — through the leading factor — the
    current losing streak.  Always non-negative.
    """
    return (cl + 1) * (params.alpha1 * losses + params.alpha2 * as_money(eval))


def fun_l(wins: int, eval: Money, cl: int, params: FairnessParams) -> Money:
    """Penalty for a previous-round winner.

    ``-(beta1 * wins + beta2 / eval) / (cl + 1)``: magnitude grows with the
    total win count, shrinks for high-quality bids, and fades as a losing
    streak accumulates.  Always non-positive.
    """
    eval = as_money(eval)
    if eval == 0:
        raise ValueError("bid quality score must be non-zero (beta2 is divided by it)")
    return -Fraction(1, cl + 1) * (params.beta1 * wins + params.beta2 / eval)


def prob_w(cl: int, params: FairnessParams) -> Fraction:
    """Probability of rewarding a loser with streak ``cl``.

    ``min(1, (cl + 1) / (max_losses + 1))``: monotone in the streak and
    certain once the streak reaches the drop threshold, so a consumer on
    the verge of dropping is always boosted.
    """
    return min(Fraction(1), Fraction(cl + 1, params.max_losses + 1))


def prob_l(cl: int, params: FairnessParams) -> Fraction:
    """Probability of penalizing a winner with streak ``cl``.

    ``1 / (cl + 1)``: certain for a consumer with no losing streak (the
    usual case right after a win, when the streak has just reset) and
    fading with streak length.  ``params`` is accepted so alternative
    shapes can be keyed off it without changing call sites.
    """
    del params
    return Fraction(1, cl + 1)


def compute_fairness_factors(
    repository,
    participants: Sequence[int],
    previous_round_outcomes: Mapping[int, Outcome],
    market_mean_prices: Sequence[Money],
    params: FairnessParams,
    rng,
) -> FairnessOutcome:
    """Run the factor-assignment procedure for one round's participants.

    ``repository`` is either an ``engine.Repository`` or a plain mapping of
    consumer id to :class:`ParticipantRecord`.  Exactly one uniform draw is
    consumed per participant, in ascending consumer-id order, regardless of
    which branch applies — so the random trace depends only on the
    participant set, never on outcomes.  Participants absent from the
    previous round (everyone, in round one) get factor 0 and branch "none".

    ``rng`` is a seeded ``numpy.random.Generator`` (anything with a
    ``random()`` method works).
    """
    records = getattr(repository, "records", repository)
    factors: dict[int, Money] = {}
    branches: dict[int, Branch] = {}
    for cid in sorted(participants):
        record = records.get(cid)
        if record is None:
            raise ValueError(f"no participation record for consumer {cid}")
        u = float(rng.random())
        outcome = previous_round_outcomes.get(cid, "absent")
        factor: Money = Fraction(0)
        branch: Branch = "none"
        if outcome == "lost":
            if u < prob_w(record.consecutive_losses, params):
                quality = eval_fun(record, market_mean_prices)
                factor = fun_w(record.losses, quality, record.consecutive_losses, params)
                branch = "reward"
        elif outcome == "won":
            if u < prob_l(record.consecutive_losses, params):
                quality = eval_fun(record, market_mean_prices)
                factor = fun_l(record.wins, quality, record.consecutive_losses, params)
                branch = "penalty"
        elif outcome != "absent":
            raise ValueError(f"consumer {cid}: unknown previous-round outcome {outcome!r}")
        factors[cid] = factor
        branches[cid] = branch
    return FairnessOutcome(factors=factors, applied_branch=branches)

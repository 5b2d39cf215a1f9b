"""Core domain types for the combinatorial double auction.

Monetary values are exact rationals (`fractions.Fraction`) throughout, so
midpoint trade prices and budget-balance checks are exact equalities rather
than floating-point approximations.  Quantities are integers: resources are
discrete units.

All types are immutable value objects; constructing one with an invalid
field combination raises ``ValueError``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

import numpy as np

Money = Fraction

__all__ = [
    "Money",
    "as_money",
    "MarketShape",
    "ConsumerBid",
    "ProviderBid",
    "ExtendedConsumerBid",
    "ParticipantRecord",
    "FairnessParams",
    "Allocation",
    "RoundResult",
    "budget",
]


def as_money(value) -> Money:
    """Coerce a numeric value to an exact :class:`Fraction`.

    Floats are converted through their decimal string form, so
    ``as_money(0.1) == Fraction(1, 10)`` rather than the binary expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError(f"cannot interpret {value!r} as a monetary value")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(str(value))
    if isinstance(value, str):
        return Fraction(value)
    raise ValueError(f"cannot interpret {value!r} as a monetary value")


def _money_tuple(values: Sequence, what: str) -> tuple[Money, ...]:
    out = tuple(as_money(v) for v in values)
    for v in out:
        if v < 0:
            raise ValueError(f"{what} must be non-negative, got {v}")
    return out


def _quantity_tuple(values: Sequence, what: str) -> tuple[int, ...]:
    out = []
    for v in values:
        iv = int(v)
        if iv != v:
            raise ValueError(f"{what} must be integers, got {v!r}")
        if iv < 0:
            raise ValueError(f"{what} must be non-negative, got {iv}")
        out.append(iv)
    return tuple(out)


@dataclass(frozen=True)
class MarketShape:
    """Market dimensions: consumer, provider, and resource-type counts.

    Zero counts are tolerated so degenerate edge markets (for example a
    round in which every consumer has dropped out) remain representable;
    scenario generation requires all counts to be at least one.
    """

    num_consumers: int
    num_providers: int
    num_resource_types: int

    def __post_init__(self):
        for name in ("num_consumers", "num_providers", "num_resource_types"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {value!r}")


@dataclass(frozen=True)
class ConsumerBid:
    """A consumer's request: per-type unit prices and a bundle of quantities.

    The bid asks for ``quantities[l]`` units of each resource type ``l`` at a
    suggested unit price of ``unit_prices[l]``.  A bid must request at least
    one unit of something; an all-zero request is rejected.
    """

    consumer_id: int
    unit_prices: tuple[Money, ...]
    quantities: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "unit_prices", _money_tuple(self.unit_prices, "consumer unit prices")
        )
        object.__setattr__(
            self, "quantities", _quantity_tuple(self.quantities, "consumer quantities")
        )
        if len(self.unit_prices) != len(self.quantities):
            raise ValueError(
                f"consumer {self.consumer_id}: price vector has length "
                f"{len(self.unit_prices)} but quantity vector has length "
                f"{len(self.quantities)}"
            )
        if not any(q >= 1 for q in self.quantities):
            raise ValueError(
                f"consumer {self.consumer_id}: bid requests no resources at all"
            )

    @property
    def num_types(self) -> int:
        return len(self.quantities)


@dataclass(frozen=True)
class ProviderBid:
    """A provider's offer: per-type unit asking prices and available supply."""

    provider_id: int
    unit_prices: tuple[Money, ...]
    quantities: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "unit_prices", _money_tuple(self.unit_prices, "provider unit prices")
        )
        object.__setattr__(
            self, "quantities", _quantity_tuple(self.quantities, "provider quantities")
        )
        if len(self.unit_prices) != len(self.quantities):
            raise ValueError(
                f"provider {self.provider_id}: price vector has length "
                f"{len(self.unit_prices)} but quantity vector has length "
                f"{len(self.quantities)}"
            )

    @property
    def num_types(self) -> int:
        return len(self.quantities)


@dataclass(frozen=True)
class ExtendedConsumerBid:
    """A consumer bid extended with its fairness factor for this round.

    The fairness factor is a signed currency-scale value added to the
    winner-determination objective when this consumer wins.  Positive values
    boost persistent losers, negative values throttle repeat winners.
    """

    bid: ConsumerBid
    fairness_factor: Money = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "fairness_factor", as_money(self.fairness_factor))

    @property
    def consumer_id(self) -> int:
        return self.bid.consumer_id


@dataclass(frozen=True)
class ParticipantRecord:
    """Per-consumer participation history kept by the auction repository.

    ``consecutive_losses`` is the length of the current losing streak and
    resets to zero on a win.  ``price_history`` holds the per-type unit
    prices this consumer offered in each past round, most recent last; it
    feeds the bid-quality evaluation.  ``dropped_at_round``, once set, never
    changes.
    """

    wins: int = 0
    losses: int = 0
    consecutive_losses: int = 0
    dropped_at_round: Optional[int] = None
    price_history: tuple[tuple[Money, ...], ...] = ()

    def __post_init__(self):
        for name in ("wins", "losses", "consecutive_losses"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {value!r}")
        if self.consecutive_losses > self.losses:
            raise ValueError(
                f"consecutive_losses ({self.consecutive_losses}) cannot exceed "
                f"losses ({self.losses})"
            )
        if self.dropped_at_round is not None and self.dropped_at_round < 1:
            raise ValueError("dropped_at_round must be a round index >= 1")
        object.__setattr__(
            self,
            "price_history",
            tuple(_money_tuple(entry, "price history entry") for entry in self.price_history),
        )

    @property
    def dropped(self) -> bool:
        return self.dropped_at_round is not None

    def last_offered_prices(self) -> Optional[tuple[Money, ...]]:
        """Most recent price vector this consumer offered, or None."""
        return self.price_history[-1] if self.price_history else None

    def after_win(self, offered_prices: Sequence) -> "ParticipantRecord":
        """Successor record after winning a round: streak resets to zero."""
        return ParticipantRecord(
            wins=self.wins + 1,
            losses=self.losses,
            consecutive_losses=0,
            dropped_at_round=self.dropped_at_round,
            price_history=self.price_history + (tuple(offered_prices),),
        )

    def after_loss(self, offered_prices: Sequence) -> "ParticipantRecord":
        """Successor record after losing a round: the streak grows by one."""
        return ParticipantRecord(
            wins=self.wins,
            losses=self.losses + 1,
            consecutive_losses=self.consecutive_losses + 1,
            dropped_at_round=self.dropped_at_round,
            price_history=self.price_history + (tuple(offered_prices),),
        )

    def marked_dropped(self, round_index: int) -> "ParticipantRecord":
        """Successor record with the drop round recorded; idempotent once set."""
        if self.dropped_at_round is not None:
            return self
        return ParticipantRecord(
            wins=self.wins,
            losses=self.losses,
            consecutive_losses=self.consecutive_losses,
            dropped_at_round=round_index,
            price_history=self.price_history,
        )


@dataclass(frozen=True)
class FairnessParams:
    """Coefficients of the fairness-factor policy.

    ``alpha1``/``alpha2`` weight the loss count and bid quality in the
    loser-reward formula; ``beta1``/``beta2`` weight the win count and
    inverse bid quality in the winner-penalty formula.  ``max_losses`` is
    the longest tolerated losing streak: one more consecutive loss and the
    consumer drops out.
    """

    alpha1: Money = Fraction(9)
    alpha2: Money = Fraction(7)
    beta1: Money = Fraction(4)
    beta2: Money = Fraction(28)
    max_losses: int = 6

    def __post_init__(self):
        for name in ("alpha1", "alpha2", "beta1", "beta2"):
            object.__setattr__(self, name, as_money(getattr(self, name)))
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.beta2 <= 0:
            raise ValueError("beta2 must be strictly positive (it is divided by the bid quality)")
        if not isinstance(self.max_losses, int) or self.max_losses < 1:
            raise ValueError(f"max_losses must be a positive integer, got {self.max_losses!r}")


@dataclass(frozen=True, eq=False)
class Allocation:
    """A winner vector and the dense transfer tensor of one clearing.

    ``winners[n]`` says whether consumer ``n`` won; ``transfers[n, l, m]``
    is the number of units of type ``l`` consumer ``n`` takes from provider
    ``m``.  The constructor checks intrinsic well-formedness only (shapes,
    integrality, non-negativity); feasibility against a concrete instance —
    supply, demand exactness, linkage, price compatibility — is checked by
    ``wdp_solver.validate_solution`` so that deliberately infeasible
    allocations can be constructed and diagnosed.
    """

    winners: tuple[bool, ...]
    transfers: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "winners", tuple(bool(w) for w in self.winners))
        transfers = np.asarray(self.transfers, dtype=np.int64)
        if transfers.ndim != 3:
            raise ValueError(f"transfers must be a 3-d array, got shape {transfers.shape}")
        if transfers.shape[0] != len(self.winners):
            raise ValueError(
                f"transfers first axis ({transfers.shape[0]}) must match the "
                f"number of winners entries ({len(self.winners)})"
            )
        if transfers.size and transfers.min() < 0:
            raise ValueError("transfers must be non-negative")
        transfers.flags.writeable = False
        object.__setattr__(self, "transfers", transfers)

    @classmethod
    def empty(cls, shape: MarketShape) -> "Allocation":
        zeros = np.zeros(
            (shape.num_consumers, shape.num_resource_types, shape.num_providers),
            dtype=np.int64,
        )
        return cls(winners=(False,) * shape.num_consumers, transfers=zeros)

    @property
    def num_winners(self) -> int:
        return sum(self.winners)

    def units_sold(self) -> int:
        return int(self.transfers.sum())

    def __eq__(self, other):
        if not isinstance(other, Allocation):
            return NotImplemented
        return self.winners == other.winners and np.array_equal(
            self.transfers, other.transfers
        )

    __hash__ = None


@dataclass(frozen=True)
class RoundResult:
    """Everything that happened in one auction round.

    Payments and receipts are exact; ``sum(consumer_payments.values()) ==
    sum(provider_receipts.values())`` holds as an equality (the auctioneer
    keeps nothing).  ``offered_prices`` records each participant's per-type
    bid prices so that repository evolution is replayable from the round log
    alone.
    """

    round_index: int
    allocation: Allocation
    unit_trade_prices: Mapping[tuple[int, int, int], Money]
    consumer_payments: Mapping[int, Money]
    provider_receipts: Mapping[int, Money]
    consumer_utilities: Mapping[int, Money]
    provider_utilities: Mapping[int, Money]
    total_utility: Money
    total_satisfaction: Money
    utilization_percent: float
    win_percent: float
    drops_this_round: tuple[int, ...] = ()
    offered_prices: Mapping[int, tuple[Money, ...]] = field(default_factory=dict)

    @property
    def participant_ids(self) -> tuple[int, ...]:
        return tuple(sorted(self.offered_prices))

    @property
    def winner_ids(self) -> tuple[int, ...]:
        ids = self.participant_ids
        if len(ids) != len(self.allocation.winners):
            raise ValueError(
                "offered_prices does not cover the allocation's consumers; "
                "winner ids cannot be recovered"
            )
        return tuple(cid for cid, won in zip(ids, self.allocation.winners) if won)


def budget(bid: ConsumerBid) -> Money:
    """Total amount the consumer is prepared to pay for the whole bundle.

    This is the dot product of the bid's unit prices and quantities; it is
    also the consumer's gross contribution to total utility when they win.
    """
    return sum(
        (p * q for p, q in zip(bid.unit_prices, bid.quantities)), Fraction(0)
    )

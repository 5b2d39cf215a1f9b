"""Randomized bid generation for multi-round market experiments.

Provider supply and consumer demand are integer uniform draws; prices are
uniform draws on a hundredth-of-a-currency-unit grid, so every generated
value is an exact rational.  From the second round on, a consumer's price
for each type drifts uniformly within a relative band around their own
previous price, clamped back into the configured range — prices are sticky
per consumer but the market keeps moving.

Draw order is part of the reproducibility contract: per call, one block of
quantity draws then one block of price draws, each laid out participant-
major, type-minor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

import numpy as np

from .model import ConsumerBid, MarketShape, Money, ProviderBid, as_money

__all__ = ["ScenarioConfig", "generate_provider_bids", "generate_consumer_bids"]

_CENTS = 100


def _grid_bounds(price_range: tuple[Money, Money]) -> tuple[int, int]:
    lo, hi = price_range
    lo_c = math.ceil(lo * _CENTS)
    hi_c = math.floor(hi * _CENTS)
    return lo_c, hi_c


@dataclass(frozen=True)
class ScenarioConfig:
    """Market dimensions and draw ranges for one experiment.

    Defaults are the reference parametrization: 300 consumers, 5 providers,
    4 resource types, 10 independent runs, supply of 30-100 units per
    provider and type, demand of 1-3 units per consumer and type, asks in
    [50, 200], offers in [100, 250], and a 10% per-round price drift.
    """

    shape: MarketShape = field(default_factory=lambda: MarketShape(300, 5, 4))
    runs: int = 10
    provider_quantity_range: tuple[int, int] = (30, 100)
    consumer_quantity_range: tuple[int, int] = (1, 3)
    provider_price_range: tuple[Money, Money] = (Fraction(50), Fraction(200))
    consumer_price_range: tuple[Money, Money] = (Fraction(100), Fraction(250))
    price_drift: Money = Fraction(1, 10)

    def __post_init__(self):
        if (
            self.shape.num_consumers < 1
            or self.shape.num_providers < 1
            or self.shape.num_resource_types < 1
        ):
            raise ValueError("scenario generation needs at least one of each participant kind")
        if not isinstance(self.runs, int) or self.runs < 1:
            raise ValueError(f"runs must be a positive integer, got {self.runs!r}")
        for name in ("provider_quantity_range", "consumer_quantity_range"):
            lo, hi = getattr(self, name)
            if not (isinstance(lo, int) and isinstance(hi, int)):
                raise ValueError(f"{name} bounds must be integers")
            if lo < 0 or hi < lo:
                raise ValueError(f"{name} must be a non-empty non-negative interval, got [{lo}, {hi}]")
        for name in ("provider_price_range", "consumer_price_range"):
            lo, hi = getattr(self, name)
            lo, hi = as_money(lo), as_money(hi)
            object.__setattr__(self, name, (lo, hi))
            if lo < 0 or hi < lo:
                raise ValueError(f"{name} must be a non-empty non-negative interval, got [{lo}, {hi}]")
            lo_c, hi_c = _grid_bounds((lo, hi))
            if lo_c > hi_c:
                raise ValueError(f"{name} contains no representable price (grid is 1/{_CENTS})")
        object.__setattr__(self, "price_drift", as_money(self.price_drift))
        if self.price_drift < 0:
            raise ValueError(f"price_drift must be non-negative, got {self.price_drift}")


def _cents_to_money(cents: np.ndarray) -> list[list[Money]]:
    return [[Fraction(int(c), _CENTS) for c in row] for row in cents]


def generate_provider_bids(config: ScenarioConfig, rng: np.random.Generator) -> list[ProviderBid]:
    """Draw one offer per provider: per-type supply and ask prices."""
    M = config.shape.num_providers
    L = config.shape.num_resource_types
    qlo, qhi = config.provider_quantity_range
    plo_c, phi_c = _grid_bounds(config.provider_price_range)
    quantities = rng.integers(qlo, qhi, size=(M, L), endpoint=True)
    price_cents = rng.integers(plo_c, phi_c, size=(M, L), endpoint=True)
    prices = _cents_to_money(price_cents)
    return [
        ProviderBid(
            provider_id=m,
            unit_prices=tuple(prices[m]),
            quantities=tuple(int(q) for q in quantities[m]),
        )
        for m in range(M)
    ]


def generate_consumer_bids(
    config: ScenarioConfig,
    rng: np.random.Generator,
    round_index: int,
    previous_personal_prices: Optional[Mapping[int, Sequence[Money]]] = None,
) -> list[ConsumerBid]:
    """Draw one request per consumer: per-type demand and offered prices.

    In round one, prices are uniform over the configured range.  Later,
    each consumer's price for each type is uniform over
    ``[(1 - drift) * previous, (1 + drift) * previous]`` clamped into the
    range, where ``previous`` is that consumer's own price from the prior
    round (``previous_personal_prices``, keyed by consumer id, must cover
    every consumer exactly when ``round_index > 1``).
    """
    if round_index < 1:
        raise ValueError(f"round_index must be >= 1, got {round_index}")
    if round_index == 1 and previous_personal_prices is not None:
        raise ValueError("round 1 has no previous prices; pass None")
    if round_index > 1 and previous_personal_prices is None:
        raise ValueError(f"round {round_index} requires the previous round's personal prices")

    N = config.shape.num_consumers
    L = config.shape.num_resource_types
    qlo, qhi = config.consumer_quantity_range
    plo_c, phi_c = _grid_bounds(config.consumer_price_range)
    quantities = rng.integers(qlo, qhi, size=(N, L), endpoint=True)
    if qlo < 1:
        # Every bid must request something; bump one uniformly chosen type.
        for n in range(N):
            if not quantities[n].any():
                quantities[n][int(rng.integers(0, L))] = 1

    if round_index == 1:
        price_cents = rng.integers(plo_c, phi_c, size=(N, L), endpoint=True)
    else:
        lo_bounds = np.empty((N, L), dtype=np.int64)
        hi_bounds = np.empty((N, L), dtype=np.int64)
        drift = config.price_drift
        for n in range(N):
            try:
                prev = previous_personal_prices[n]
            except KeyError:
                raise ValueError(f"no previous prices for consumer {n}") from None
            if len(prev) != L:
                raise ValueError(
                    f"consumer {n}: previous prices cover {len(prev)} types, expected {L}"
                )
            for l in range(L):
                p = as_money(prev[l])
                wlo = max(plo_c, math.ceil((1 - drift) * p * _CENTS))
                whi = min(phi_c, math.floor((1 + drift) * p * _CENTS))
                if wlo > whi:
                    # Previous price sits outside the range; snap to the nearest edge.
                    wlo = whi = min(phi_c, max(plo_c, round(p * _CENTS)))
                lo_bounds[n, l] = wlo
                hi_bounds[n, l] = whi
        price_cents = rng.integers(lo_bounds, hi_bounds, size=(N, L), endpoint=True)

    prices = _cents_to_money(price_cents)
    return [
        ConsumerBid(
            consumer_id=n,
            unit_prices=tuple(prices[n]),
            quantities=tuple(int(q) for q in quantities[n]),
        )
        for n in range(N)
    ]

"""Midpoint pricing and settlement of a cleared round.

Every traded unit settles at the arithmetic mean of the consumer's offered
unit price and the provider's ask.  Both sides therefore capture the same
per-unit surplus, nobody trades at a loss, and total payments equal total
receipts exactly (all arithmetic is over rationals).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import Allocation, Money, as_money
from .wdp_solver import WdpInstance, compatible, validate_solution

__all__ = ["Settlement", "trade_price_unit", "settle"]


def trade_price_unit(consumer_price: Money, provider_price: Money) -> Money:
    """Unit trade price: the midpoint of the two suggested prices.

    Only defined for compatible pairs; a consumer offering less than the ask
    cannot trade at any price acceptable to both sides.
    """
    cp = as_money(consumer_price)
    pp = as_money(provider_price)
    if not compatible(cp, pp):
        raise ValueError(
            f"no trade price exists: consumer offers {cp}, provider asks {pp}"
        )
    return (cp + pp) / 2


@dataclass(frozen=True)
class Settlement:
    """Per-participant money flows of one cleared round.

    All maps are keyed by participant id (trade prices by consumer id, type
    index, provider id) and include zero entries for participants who did
    not trade.
    """

    unit_trade_prices: dict[tuple[int, int, int], Money]
    consumer_payments: dict[int, Money]
    provider_receipts: dict[int, Money]
    consumer_utilities: dict[int, Money]
    provider_utilities: dict[int, Money]

    def total_payments(self) -> Money:
        return sum(self.consumer_payments.values(), Fraction(0))

    def total_receipts(self) -> Money:
        return sum(self.provider_receipts.values(), Fraction(0))

    def total_utility(self) -> Money:
        return sum(self.consumer_utilities.values(), Fraction(0)) + sum(
            self.provider_utilities.values(), Fraction(0)
        )


def settle(instance: WdpInstance, allocation: Allocation) -> Settlement:
    """Price every traded unit and compute payments, receipts, and utilities.

    The allocation must be feasible for the instance.  A consumer pays the
    midpoint price for each unit received; utility is what they saved
    against their own offer, and symmetrically for providers.  Losers and
    providers who sold nothing settle at zero.
    """
    violations = validate_solution(instance, allocation)
    if violations:
        raise ValueError(
            "cannot settle an infeasible allocation:\n  " + "\n  ".join(violations)
        )
    consumer_ids = [ext.consumer_id for ext in instance.consumer_bids]
    provider_ids = [pb.provider_id for pb in instance.provider_bids]
    payments = {cid: Fraction(0) for cid in consumer_ids}
    receipts = {pid: Fraction(0) for pid in provider_ids}
    consumer_utils = {cid: Fraction(0) for cid in consumer_ids}
    provider_utils = {pid: Fraction(0) for pid in provider_ids}
    unit_prices: dict[tuple[int, int, int], Money] = {}

    y = allocation.transfers
    for n, l, m in np.argwhere(y > 0):
        units = int(y[n, l, m])
        cid = consumer_ids[n]
        pid = provider_ids[m]
        cp = instance.consumer_bids[n].bid.unit_prices[l]
        pp = instance.provider_bids[m].unit_prices[l]
        price = trade_price_unit(cp, pp)
        unit_prices[(cid, int(l), pid)] = price
        payments[cid] += units * price
        receipts[pid] += units * price
        consumer_utils[cid] += units * (cp - price)
        provider_utils[pid] += units * (price - pp)

    return Settlement(
        unit_trade_prices=unit_prices,
        consumer_payments=payments,
        provider_receipts=receipts,
        consumer_utilities=consumer_utils,
        provider_utilities=provider_utils,
    )

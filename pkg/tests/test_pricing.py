"""Midpoint pricing: exact budget balance and individual rationality."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from faircda.cli import random_micro_instance
from faircda.model import Allocation, ConsumerBid, ExtendedConsumerBid, ProviderBid
from faircda.pricing import settle, trade_price_unit
from faircda.wdp_solver import WdpInstance, objective_value, solve_exact


def micro_instance(consumer_price, provider_price, quantity, supply=None):
    bid = ConsumerBid(0, (Fraction(consumer_price),), (quantity,))
    pb = ProviderBid(0, (Fraction(provider_price),), (supply if supply is not None else quantity,))
    return WdpInstance.from_bids([ExtendedConsumerBid(bid=bid)], [pb])


class TestTradePriceUnit:
    def test_midpoint(self):
        assert trade_price_unit(Fraction(100), Fraction(50)) == 75

    def test_equal_prices(self):
        assert trade_price_unit(Fraction(80), Fraction(80)) == 80

    def test_wide_spread(self):
        assert trade_price_unit(Fraction(250), Fraction(50)) == 150

    def test_incompatible_pair_rejected(self):
        with pytest.raises(ValueError, match="no trade price"):
            trade_price_unit(Fraction(4), Fraction(5))

    @given(
        pp=st.fractions(min_value=0, max_value=1000),
        spread=st.fractions(min_value=0, max_value=1000),
    )
    def test_lies_between_the_suggested_prices(self, pp, spread):
        cp = pp + spread
        price = trade_price_unit(cp, pp)
        assert pp <= price <= cp


class TestSettle:
    def test_two_units_at_midpoint(self):
        inst = micro_instance(100, 50, 2)
        alloc = Allocation(winners=(True,), transfers=np.array([[[2]]]))
        s = settle(inst, alloc)
        assert s.consumer_payments[0] == 150
        assert s.provider_receipts[0] == 150
        assert s.consumer_utilities[0] == 50
        assert s.provider_utilities[0] == 50
        assert s.unit_trade_prices[(0, 0, 0)] == 75

    def test_empty_allocation_settles_to_zero(self):
        inst = micro_instance(100, 50, 2)
        s = settle(inst, Allocation.empty(inst.shape))
        assert s.consumer_payments == {0: 0}
        assert s.provider_receipts == {0: 0}
        assert s.consumer_utilities == {0: 0}
        assert s.provider_utilities == {0: 0}
        assert s.unit_trade_prices == {}

    def test_equal_prices_yield_zero_surplus(self):
        inst = micro_instance(80, 80, 3)
        alloc = Allocation(winners=(True,), transfers=np.array([[[3]]]))
        s = settle(inst, alloc)
        assert s.consumer_payments[0] == 240
        assert s.consumer_utilities[0] == 0
        assert s.provider_utilities[0] == 0

    def test_infeasible_allocation_rejected(self):
        inst = micro_instance(100, 50, 2, supply=1)
        bad = Allocation(winners=(True,), transfers=np.array([[[2]]]))
        with pytest.raises(ValueError, match="cannot settle"):
            settle(inst, bad)


class TestSettlementInvariants:
    def solved_settlements(self, count=40, seed=13):
        rng = np.random.default_rng(seed)
        for _ in range(count):
            inst = random_micro_instance(rng)
            sol = solve_exact(inst)
            yield inst, sol, settle(inst, sol.allocation)

    def test_budget_balance_is_exact(self):
        for _, _, s in self.solved_settlements():
            assert s.total_payments() == s.total_receipts()

    def test_individual_rationality(self):
        for _, _, s in self.solved_settlements():
            assert all(u >= 0 for u in s.consumer_utilities.values())
            assert all(u >= 0 for u in s.provider_utilities.values())

    def test_per_unit_surplus_split_is_symmetric(self):
        for inst, sol, s in self.solved_settlements():
            y = sol.allocation.transfers
            for n, l, m in np.argwhere(y > 0):
                cp = inst.consumer_bids[n].bid.unit_prices[l]
                pp = inst.provider_bids[m].unit_prices[l]
                price = s.unit_trade_prices[
                    (inst.consumer_bids[n].consumer_id, int(l), inst.provider_bids[m].provider_id)
                ]
                assert cp - price == price - pp

    def test_settlement_utilities_sum_to_wdp_total_utility(self):
        # Trade prices cancel: settlement utilities must reproduce the
        # objective's utility term exactly.
        for inst, sol, s in self.solved_settlements():
            _, total_utility, _ = objective_value(inst, sol.allocation)
            assert s.total_utility() == total_utility == sol.total_utility

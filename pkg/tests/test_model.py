"""Domain type invariants and the budget operation."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from faircda.model import (
    Allocation,
    ConsumerBid,
    ExtendedConsumerBid,
    FairnessParams,
    MarketShape,
    ParticipantRecord,
    ProviderBid,
    as_money,
    budget,
)


class TestMarketShape:
    def test_counts_stored(self):
        shape = MarketShape(3, 2, 4)
        assert (shape.num_consumers, shape.num_providers, shape.num_resource_types) == (3, 2, 4)

    @pytest.mark.parametrize("bad", [(-1, 1, 1), (1, -2, 1), (1, 1, -1)])
    def test_negative_counts_rejected(self, bad):
        with pytest.raises(ValueError):
            MarketShape(*bad)

    def test_degenerate_empty_market_allowed(self):
        # Edge markets (all consumers dropped) stay representable.
        assert MarketShape(0, 1, 1).num_consumers == 0


class TestConsumerBid:
    def test_all_zero_request_rejected(self):
        with pytest.raises(ValueError, match="no resources"):
            ConsumerBid(0, (Fraction(10), Fraction(20)), (0, 0))

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError, match="length"):
            ConsumerBid(0, (Fraction(10),), (1, 2))

    def test_negative_price_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            ConsumerBid(0, (Fraction(-1),), (1,))

    def test_negative_quantity_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            ConsumerBid(0, (Fraction(1), Fraction(1)), (2, -1))

    def test_prices_coerced_to_fractions(self):
        bid = ConsumerBid(0, (10, "1/2"), (1, 1))
        assert bid.unit_prices == (Fraction(10), Fraction(1, 2))


class TestProviderBid:
    def test_all_zero_supply_allowed(self):
        pb = ProviderBid(0, (Fraction(5), Fraction(6)), (0, 0))
        assert pb.quantities == (0, 0)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError, match="length"):
            ProviderBid(0, (Fraction(5),), (1, 2))


class TestParticipantRecord:
    def test_streak_cannot_exceed_losses(self):
        with pytest.raises(ValueError, match="consecutive_losses"):
            ParticipantRecord(wins=0, losses=1, consecutive_losses=2)

    def test_win_resets_streak(self):
        rec = ParticipantRecord(wins=1, losses=5, consecutive_losses=5)
        after = rec.after_win((Fraction(10),))
        assert after.wins == 2 and after.consecutive_losses == 0
        assert after.price_history[-1] == (Fraction(10),)

    def test_loss_extends_streak(self):
        rec = ParticipantRecord(losses=2, consecutive_losses=1)
        after = rec.after_loss((Fraction(7),))
        assert after.losses == 3 and after.consecutive_losses == 2

    def test_drop_mark_is_permanent(self):
        rec = ParticipantRecord(losses=7, consecutive_losses=7).marked_dropped(7)
        assert rec.dropped_at_round == 7
        assert rec.marked_dropped(9).dropped_at_round == 7


class TestFairnessParams:
    def test_defaults_match_reference_parametrization(self):
        p = FairnessParams()
        assert (p.alpha1, p.alpha2, p.beta1, p.beta2, p.max_losses) == (9, 7, 4, 28, 6)

    def test_beta2_zero_rejected(self):
        with pytest.raises(ValueError, match="beta2"):
            FairnessParams(beta2=0)

    def test_max_losses_zero_rejected(self):
        with pytest.raises(ValueError, match="max_losses"):
            FairnessParams(max_losses=0)


class TestAllocation:
    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="first axis"):
            Allocation(winners=(True,), transfers=np.zeros((2, 1, 1), dtype=np.int64))

    def test_negative_transfers_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            Allocation(winners=(True,), transfers=np.array([[[-1]]]))

    def test_transfers_frozen(self):
        alloc = Allocation(winners=(True,), transfers=np.ones((1, 1, 1), dtype=np.int64))
        with pytest.raises(ValueError):
            alloc.transfers[0, 0, 0] = 2

    def test_value_equality(self):
        a = Allocation(winners=(True,), transfers=np.ones((1, 1, 1), dtype=np.int64))
        b = Allocation(winners=(True,), transfers=np.ones((1, 1, 1), dtype=np.int64))
        assert a == b and a.units_sold() == 1


class TestBudget:
    def test_hand_computed_example(self):
        bid = ConsumerBid(0, (Fraction(10), Fraction(20)), (1, 2))
        assert budget(bid) == 50

    def test_zero_quantity_type_contributes_nothing(self):
        bid = ConsumerBid(0, (Fraction(10), Fraction(20)), (0, 1))
        assert budget(bid) == 20

    def test_zero_prices(self):
        bid = ConsumerBid(0, (Fraction(0), Fraction(0)), (1, 1))
        assert budget(bid) == 0

    @given(
        prices=st.lists(st.integers(0, 50), min_size=1, max_size=4),
        quantities=st.lists(st.integers(0, 5), min_size=1, max_size=4),
    )
    def test_matches_dot_product(self, prices, quantities):
        size = min(len(prices), len(quantities))
        prices, quantities = prices[:size], quantities[:size]
        if not any(quantities):
            quantities[0] = 1
        bid = ConsumerBid(0, tuple(map(Fraction, prices)), tuple(quantities))
        assert budget(bid) == sum(p * q for p, q in zip(prices, quantities))


class TestAsMoney:
    def test_float_uses_decimal_meaning(self):
        assert as_money(0.1) == Fraction(1, 10)

    def test_string_fraction(self):
        assert as_money("3/2") == Fraction(3, 2)

    def test_bool_rejected(self):
        with pytest.raises(ValueError):
            as_money(True)


def test_extended_bid_carries_factor():
    bid = ConsumerBid(3, (Fraction(5),), (1,))
    ext = ExtendedConsumerBid(bid=bid, fairness_factor=-2)
    assert ext.consumer_id == 3 and ext.fairness_factor == Fraction(-2)

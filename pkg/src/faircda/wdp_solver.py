"""Winner determination: who trades, with whom, at exact minimum cost.

The problem: pick a set of winning consumers (each served their full bundle,
partial fills forbidden) and route units from providers to winners so that
no provider oversells, every traded unit is price-compatible (consumer's
unit price >= provider's ask), and the sum of winner budgets plus fairness
factors minus provider-side cost is maximal.

Because a consumer can buy type ``l`` only from providers asking at most
their own unit price, the providers available to a consumer always form a
prefix of the providers sorted by ask price.  Two consequences drive every
solver here:

* a winner set is feasible for type ``l`` iff, for every prefix of the
  sorted providers, the demand of winners who can reach *only* that prefix
  fits within the prefix's supply;
* the minimum routing cost depends only on each type's total winner demand:
  buy that many units cheapest-first (serving winners in ascending order of
  their price threshold, each from the cheapest remaining provider,
  realizes exactly that multiset).

``solve_exact`` runs depth-first branch and bound over the winner vector,
``solve_oracle`` enumerates all winner subsets, and ``solve_heuristic``
greedily admits consumers by optimistic margin with one drop-and-readd
repair pass.  All three return allocations that validate clean.
"""

from __future__ import annotations

import time
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .model import (
    Allocation,
    ConsumerBid,
    ExtendedConsumerBid,
    MarketShape,
    Money,
    ProviderBid,
    as_money,
    budget,
)

__all__ = [
    "WdpInstance",
    "WdpSolution",
    "SolverLimits",
    "compatible",
    "budget_of",
    "objective_value",
    "min_cost_allocation",
    "solve_exact",
    "solve_oracle",
    "solve_heuristic",
    "validate_solution",
    "dump_instance",
    "load_instance",
]

ORACLE_MAX_CONSUMERS = 12


def compatible(consumer_price: Money, provider_price: Money) -> bool:
    """A unit may trade at these prices iff the consumer offers at least the ask."""
    return as_money(consumer_price) >= as_money(provider_price)


@dataclass(frozen=True)
class WdpInstance:
    """One round's winner-determination problem.

    ``budgets[n]`` must equal the dot product of consumer ``n``'s prices and
    quantities (it is stored precomputed because the objective reuses it
    constantly).  Bid order is significant: objective ties are broken toward
    the lexicographically smallest winner vector over this order, so callers
    should pass consumer bids sorted by ascending consumer id.
    """

    shape: MarketShape
    consumer_bids: tuple[ExtendedConsumerBid, ...]
    provider_bids: tuple[ProviderBid, ...]
    budgets: tuple[Money, ...]

    def __post_init__(self):
        object.__setattr__(self, "consumer_bids", tuple(self.consumer_bids))
        object.__setattr__(self, "provider_bids", tuple(self.provider_bids))
        object.__setattr__(self, "budgets", tuple(as_money(b) for b in self.budgets))
        if len(self.consumer_bids) != self.shape.num_consumers:
            raise ValueError(
                f"expected {self.shape.num_consumers} consumer bids, "
                f"got {len(self.consumer_bids)}"
            )
        if len(self.provider_bids) != self.shape.num_providers:
            raise ValueError(
                f"expected {self.shape.num_providers} provider bids, "
                f"got {len(self.provider_bids)}"
            )
        if len(self.budgets) != len(self.consumer_bids):
            raise ValueError("one budget per consumer bid is required")
        L = self.shape.num_resource_types
        seen_consumers = set()
        for ext, v in zip(self.consumer_bids, self.budgets):
            if ext.bid.num_types != L:
                raise ValueError(
                    f"consumer {ext.consumer_id}: bid covers {ext.bid.num_types} "
                    f"resource types, market has {L}"
                )
            if ext.consumer_id in seen_consumers:
                raise ValueError(f"duplicate consumer id {ext.consumer_id}")
            seen_consumers.add(ext.consumer_id)
            if v != budget(ext.bid):
                raise ValueError(
                    f"consumer {ext.consumer_id}: stored budget {v} does not match "
                    f"the bid's price-quantity product {budget(ext.bid)}"
                )
        seen_providers = set()
        for pb in self.provider_bids:
            if pb.num_types != L:
                raise ValueError(
                    f"provider {pb.provider_id}: bid covers {pb.num_types} "
                    f"resource types, market has {L}"
                )
            if pb.provider_id in seen_providers:
                raise ValueError(f"duplicate provider id {pb.provider_id}")
            seen_providers.add(pb.provider_id)

    @classmethod
    def from_bids(
        cls,
        consumer_bids: Iterable[ExtendedConsumerBid | ConsumerBid],
        provider_bids: Iterable[ProviderBid],
        num_resource_types: Optional[int] = None,
    ) -> "WdpInstance":
        """Build an instance, extending plain bids with factor 0 and computing budgets."""
        ext_bids = tuple(
            b if isinstance(b, ExtendedConsumerBid) else ExtendedConsumerBid(bid=b)
            for b in consumer_bids
        )
        providers = tuple(provider_bids)
        if num_resource_types is None:
            if ext_bids:
                num_resource_types = ext_bids[0].bid.num_types
            elif providers:
                num_resource_types = providers[0].num_types
            else:
                raise ValueError("cannot infer the number of resource types from no bids")
        shape = MarketShape(
            num_consumers=len(ext_bids),
            num_providers=len(providers),
            num_resource_types=num_resource_types,
        )
        budgets = tuple(budget(b.bid) for b in ext_bids)
        return cls(shape=shape, consumer_bids=ext_bids, provider_bids=providers, budgets=budgets)

    def consumer_position(self, consumer_id: int) -> int:
        for pos, ext in enumerate(self.consumer_bids):
            if ext.consumer_id == consumer_id:
                return pos
        raise ValueError(f"consumer id {consumer_id} is not part of this instance")


@dataclass(frozen=True)
class WdpSolution:
    """A solved allocation plus its exact objective decomposition."""

    allocation: Allocation
    objective: Money
    total_utility: Money
    total_satisfaction: Money
    optimality: str
    gap_bound: Money = Fraction(0)

    def __post_init__(self):
        if self.optimality not in ("proved_optimal", "heuristic", "oracle"):
            raise ValueError(f"unknown optimality tag {self.optimality!r}")
        if self.objective != self.total_utility + self.total_satisfaction:
            raise ValueError(
                "objective must equal total_utility + total_satisfaction "
                f"({self.objective} != {self.total_utility} + {self.total_satisfaction})"
            )
        if self.gap_bound < 0:
            raise ValueError("gap_bound must be non-negative")
        if self.optimality in ("proved_optimal", "oracle") and self.gap_bound != 0:
            raise ValueError("a proved-optimal solution must report gap_bound 0")

    @property
    def winner_positions(self) -> tuple[int, ...]:
        return tuple(n for n, won in enumerate(self.allocation.winners) if won)


@dataclass(frozen=True)
class SolverLimits:
    """Search budgets for the exact solver.

    ``node_budget`` is the deterministic limit; ``time_budget_s`` (None for
    unlimited) additionally caps wall-clock time but makes truncated results
    machine-dependent.
    """

    node_budget: int = 1_000_000
    time_budget_s: Optional[float] = None

    def __post_init__(self):
        if self.node_budget <= 0:
            raise ValueError(f"node_budget must be positive, got {self.node_budget}")
        if self.time_budget_s is not None and self.time_budget_s <= 0:
            raise ValueError(f"time_budget_s must be positive, got {self.time_budget_s}")


class _InstanceView:
    """Precomputed per-instance arrays shared by the solvers.

    Providers are sorted per type by (ask price, position).  ``reach[n][l]``
    is how many of those sorted providers consumer ``n`` can afford for type
    ``l``; the feasibility and cost logic works entirely on reach counts,
    cumulative supply, and cumulative cost.
    """

    def __init__(self, instance: WdpInstance):
        self.instance = instance
        self.N = instance.shape.num_consumers
        self.M = instance.shape.num_providers
        self.L = instance.shape.num_resource_types
        self.q = [list(ext.bid.quantities) for ext in instance.consumer_bids]
        self.thresholds = [list(ext.bid.unit_prices) for ext in instance.consumer_bids]
        self.w = [
            v + ext.fairness_factor
            for v, ext in zip(instance.budgets, instance.consumer_bids)
        ]

        self.sorted_prices: list[list[Money]] = []
        self.sorted_supply: list[list[int]] = []
        self.sorted_positions: list[list[int]] = []
        self.cumsup: list[list[int]] = []
        self.cumcost: list[list[Money]] = []
        for l in range(self.L):
            order = sorted(
                range(self.M), key=lambda m: (instance.provider_bids[m].unit_prices[l], m)
            )
            prices = [instance.provider_bids[m].unit_prices[l] for m in order]
            supply = [instance.provider_bids[m].quantities[l] for m in order]
            self.sorted_prices.append(prices)
            self.sorted_supply.append(supply)
            self.sorted_positions.append(order)
            cs = [0]
            cc = [Fraction(0)]
            for p, s in zip(prices, supply):
                cs.append(cs[-1] + s)
                cc.append(cc[-1] + p * s)
            self.cumsup.append(cs)
            self.cumcost.append(cc)

        self.reach = [
            [bisect_right(self.sorted_prices[l], self.thresholds[n][l]) for l in range(self.L)]
            for n in range(self.N)
        ]

        self.cheapest_bound: list[Money] = []
        self.feasible_alone: list[bool] = []
        for n in range(self.N):
            bound = Fraction(0)
            ok = True
            for l in range(self.L):
                qn = self.q[n][l]
                if qn == 0:
                    continue
                r = self.reach[n][l]
                if r == 0 or qn > self.cumsup[l][r]:
                    ok = False
                    break
                bound += qn * self.sorted_prices[l][0]
            self.cheapest_bound.append(bound if ok else Fraction(0))
            self.feasible_alone.append(ok)
        self.optimistic = [
            max(Fraction(0), self.w[n] - self.cheapest_bound[n]) if self.feasible_alone[n] else Fraction(0)
            for n in range(self.N)
        ]

    def new_state(self) -> list[list[int]]:
        """Per-type cumulative demand by reach prefix; index k covers reaches <= k+1."""
        return [[0] * self.M for _ in range(self.L)]

    def can_add(self, cumdem: list[list[int]], n: int) -> bool:
        if not self.feasible_alone[n]:
            return False
        for l in range(self.L):
            qn = self.q[n][l]
            if qn == 0:
                continue
            r = self.reach[n][l]
            row = cumdem[l]
            csl = self.cumsup[l]
            for k in range(r - 1, self.M):
                if row[k] + qn > csl[k + 1]:
                    return False
        return True

    def add(self, cumdem: list[list[int]], n: int) -> None:
        for l in range(self.L):
            qn = self.q[n][l]
            if qn == 0:
                continue
            row = cumdem[l]
            for k in range(self.reach[n][l] - 1, self.M):
                row[k] += qn
        return None

    def remove(self, cumdem: list[list[int]], n: int) -> None:
        for l in range(self.L):
            qn = self.q[n][l]
            if qn == 0:
                continue
            row = cumdem[l]
            for k in range(self.reach[n][l] - 1, self.M):
                row[k] -= qn

    def cost_of_demand(self, l: int, demand: int) -> Money:
        """Cheapest-first cost of buying ``demand`` units of type ``l``."""
        if demand == 0:
            return Fraction(0)
        cs = self.cumsup[l]
        idx = bisect_left(cs, demand)
        if idx >= len(cs):
            raise ValueError(f"demand {demand} exceeds total supply of type {l}")
        return self.cumcost[l][idx - 1] + (demand - cs[idx - 1]) * self.sorted_prices[l][idx - 1]

    def total_cost(self, cumdem: list[list[int]]) -> Money:
        total = Fraction(0)
        for l in range(self.L):
            total += self.cost_of_demand(l, cumdem[l][self.M - 1] if self.M else 0)
        return total


def min_cost_allocation(
    instance: WdpInstance, winner_set: Iterable[int]
) -> Optional[np.ndarray]:
    """Cheapest feasible routing that fully serves every winner, or None.

    ``winner_set`` holds consumer ids.  Each resource type is routed
    independently: winners are served in ascending order of their price
    threshold, each from the cheapest provider with remaining stock they can
    afford.  Returns the dense transfers array, or None when some winner
    cannot be fully served within supply and price compatibility.
    """
    ids = set(winner_set)
    positions = []
    for pos, ext in enumerate(instance.consumer_bids):
        if ext.consumer_id in ids:
            positions.append(pos)
            ids.discard(ext.consumer_id)
    if ids:
        raise ValueError(f"winner ids {sorted(ids)} are not part of this instance")

    N = instance.shape.num_consumers
    M = instance.shape.num_providers
    L = instance.shape.num_resource_types
    y = np.zeros((N, L, M), dtype=np.int64)
    for l in range(L):
        order = sorted(range(M), key=lambda m: (instance.provider_bids[m].unit_prices[l], m))
        prices = [instance.provider_bids[m].unit_prices[l] for m in order]
        remaining = [instance.provider_bids[m].quantities[l] for m in order]
        queue = sorted(
            (
                (instance.consumer_bids[n].bid.unit_prices[l], n)
                for n in positions
                if instance.consumer_bids[n].bid.quantities[l] > 0
            ),
        )
        k = 0
        for threshold, n in queue:
            need = instance.consumer_bids[n].bid.quantities[l]
            while need > 0:
                while k < M and remaining[k] == 0:
                    k += 1
                if k == M or prices[k] > threshold:
                    return None
                take = min(need, remaining[k])
                y[n, l, order[k]] = take
                remaining[k] -= take
                need -= take
    return y


def validate_solution(instance: WdpInstance, allocation: Allocation) -> list[str]:
    """Check every constraint family; return one message per violation.

    An empty list means the allocation is feasible for this instance.  The
    two linkage inequalities are checked even though demand exactness
    implies them, so a diagnosed allocation reports every broken constraint.
    """
    N = instance.shape.num_consumers
    M = instance.shape.num_providers
    L = instance.shape.num_resource_types
    y = allocation.transfers
    if len(allocation.winners) != N or y.shape != (N, L, M):
        raise ValueError(
            f"allocation shape {y.shape} with {len(allocation.winners)} winners "
            f"does not match the instance shape ({N}, {L}, {M})"
        )
    violations: list[str] = []
    x = np.array(allocation.winners, dtype=np.int64)
    # Lower bound of the transfer domain (y >= 0) is enforced by the
    # Allocation constructor; everything instance-dependent is checked here.
    caps = np.array(
        [[pb.quantities[l] for pb in instance.provider_bids] for l in range(L)],
        dtype=np.int64,
    ).reshape(L, M)

    for n, l, m in np.argwhere(y > caps[None, :, :]):
        violations.append(
            f"y[{n},{l},{m}] = {y[n, l, m]} exceeds provider "
            f"{instance.provider_bids[m].provider_id}'s offer of {caps[l, m]} "
            f"units of type {l} (transfer domain)"
        )

    per_consumer_total = y.sum(axis=(1, 2))
    requested = np.array(
        [sum(ext.bid.quantities) for ext in instance.consumer_bids], dtype=np.int64
    ).reshape(N)
    for (n,) in np.argwhere(x * requested < per_consumer_total):
        violations.append(
            f"consumer {instance.consumer_bids[n].consumer_id}: receives "
            f"{per_consumer_total[n]} units but is not marked a winner covering "
            f"them (linkage lower bound)"
        )
    for (n,) in np.argwhere(x > per_consumer_total):
        violations.append(
            f"consumer {instance.consumer_bids[n].consumer_id}: marked winner but "
            f"receives no units (linkage upper bound)"
        )

    sold = y.sum(axis=0)
    for l, m in np.argwhere(sold > caps):
        violations.append(
            f"provider {instance.provider_bids[m].provider_id}: sells {sold[l, m]} "
            f"units of type {l}, offered only {caps[l, m]} (supply)"
        )

    received = y.sum(axis=2)
    demand = np.array(
        [list(ext.bid.quantities) for ext in instance.consumer_bids], dtype=np.int64
    ).reshape(N, L)
    for n, l in np.argwhere(received != demand * x[:, None]):
        expected = demand[n, l] if x[n] else 0
        violations.append(
            f"consumer {instance.consumer_bids[n].consumer_id}: receives "
            f"{received[n, l]} units of type {l}, demand exactness requires {expected}"
        )

    for n, l, m in np.argwhere(y > 0):
        cp = instance.consumer_bids[n].bid.unit_prices[l]
        pp = instance.provider_bids[m].unit_prices[l]
        if not compatible(cp, pp):
            violations.append(
                f"consumer {instance.consumer_bids[n].consumer_id} pays {cp} per unit "
                f"of type {l} but provider {instance.provider_bids[m].provider_id} "
                f"asks {pp} (price compatibility)"
            )
    return violations


def objective_value(
    instance: WdpInstance, allocation: Allocation
) -> tuple[Money, Money, Money]:
    """Exact (objective, total_utility, total_satisfaction) of a feasible allocation.

    Total utility collapses to winner budgets minus provider-side cost
    because every trade price appears once positively (provider revenue) and
    once negatively (consumer payment).
    """
    violations = validate_solution(instance, allocation)
    if violations:
        raise ValueError(
            "allocation violates the instance constraints:\n  " + "\n  ".join(violations)
        )
    total_utility = Fraction(0)
    total_satisfaction = Fraction(0)
    for n, ext in enumerate(instance.consumer_bids):
        if allocation.winners[n]:
            total_utility += instance.budgets[n]
            total_satisfaction += ext.fairness_factor
    y = allocation.transfers
    for n, l, m in np.argwhere(y > 0):
        total_utility -= int(y[n, l, m]) * instance.provider_bids[m].unit_prices[l]
    return total_utility + total_satisfaction, total_utility, total_satisfaction


def _build_solution(
    instance: WdpInstance,
    winner_positions: Sequence[int],
    optimality: str,
    gap_bound: Money = Fraction(0),
) -> WdpSolution:
    ids = [instance.consumer_bids[n].consumer_id for n in winner_positions]
    y = min_cost_allocation(instance, ids)
    if y is None:
        raise RuntimeError("internal error: solver produced an infeasible winner set")
    chosen = set(winner_positions)
    winners = tuple(n in chosen for n in range(instance.shape.num_consumers))
    allocation = Allocation(winners=winners, transfers=y)
    objective, utility, satisfaction = objective_value(instance, allocation)
    return WdpSolution(
        allocation=allocation,
        objective=objective,
        total_utility=utility,
        total_satisfaction=satisfaction,
        optimality=optimality,
        gap_bound=gap_bound,
    )


def solve_oracle(instance: WdpInstance) -> WdpSolution:
    """Exhaustive reference solver: every winner subset, evaluated naively.

    Kept deliberately free of the branch-and-bound machinery so the two
    solvers fail independently.  Guarded to small instances.
    """
    N = instance.shape.num_consumers
    if N > ORACLE_MAX_CONSUMERS:
        raise ValueError(
            f"oracle enumeration is limited to {ORACLE_MAX_CONSUMERS} consumers, "
            f"instance has {N}"
        )
    best_positions: list[int] = []
    best_objective: Optional[Money] = None
    for mask in range(1 << N):
        positions = [n for n in range(N) if mask & (1 << (N - 1 - n))]
        ids = [instance.consumer_bids[n].consumer_id for n in positions]
        y = min_cost_allocation(instance, ids)
        if y is None:
            continue
        winners = tuple(n in set(positions) for n in range(N))
        allocation = Allocation(winners=winners, transfers=y)
        objective, _, _ = objective_value(instance, allocation)
        if best_objective is None or objective > best_objective:
            best_objective = objective
            best_positions = positions
    return _build_solution(instance, best_positions, optimality="oracle")


def solve_exact(instance: WdpInstance, limits: Optional[SolverLimits] = None) -> WdpSolution:
    """Branch and bound over the winner vector, exact within the given limits.

    Consumers are decided in bid order, exclude branch first, so subsets are
    visited in lexicographic winner-vector order and the first incumbent
    among ties is the lexicographically smallest.  Node bounds add each
    undecided consumer's optimistic margin (budget plus fairness factor
    minus their demand priced at the cheapest compatible ask, supply
    ignored).  If a budget runs out first, the incumbent is returned with a
    gap bound from the open nodes.
    """
    if limits is None:
        limits = SolverLimits()
    view = _InstanceView(instance)
    N = view.N

    suffix_opt = [Fraction(0)] * (N + 1)
    for n in range(N - 1, -1, -1):
        suffix_opt[n] = suffix_opt[n + 1] + view.optimistic[n]

    # The empty set is always feasible: start from it, objective 0.  Because
    # subtrees are visited in lexicographic winner-vector order and the
    # incumbent is replaced only on strict improvement, the returned
    # optimum is the lexicographically smallest among ties.
    incumbent: list[int] = []
    incumbent_obj = Fraction(0)

    # Stack entries: (next consumer index, winner positions, demand state, winner-value sum).
    stack: list[tuple[int, list[int], list[list[int]], Money]] = [
        (0, [], view.new_state(), Fraction(0))
    ]
    nodes = 0
    truncated = False
    started = time.monotonic()
    while stack:
        if nodes >= limits.node_budget:
            truncated = True
            break
        if (
            limits.time_budget_s is not None
            and nodes % 256 == 0
            and time.monotonic() - started > limits.time_budget_s
        ):
            truncated = True
            break
        i, chosen, cumdem, wsum = stack.pop()
        nodes += 1
        node_obj = wsum - view.total_cost(cumdem)
        if i == N:
            if node_obj > incumbent_obj:
                incumbent = chosen
                incumbent_obj = node_obj
            continue
        if node_obj + suffix_opt[i] <= incumbent_obj:
            continue
        # Push include first so the exclude branch pops (and is explored) first.
        if view.can_add(cumdem, i):
            child = [row[:] for row in cumdem]
            view.add(child, i)
            stack.append((i + 1, chosen + [i], child, wsum + view.w[i]))
        stack.append((i + 1, chosen, cumdem, wsum))

    if truncated:
        open_bound = incumbent_obj
        for i, _chosen, cumdem, wsum in stack:
            bound = wsum - view.total_cost(cumdem) + suffix_opt[i]
            if bound > open_bound:
                open_bound = bound
        gap = open_bound - incumbent_obj
        if gap > 0:
            return _build_solution(instance, incumbent, optimality="heuristic", gap_bound=gap)
    return _build_solution(instance, incumbent, optimality="proved_optimal")


def solve_heuristic(instance: WdpInstance) -> WdpSolution:
    """Greedy admission by optimistic margin with one drop-and-readd pass.

    Consumers are ranked by budget plus fairness factor minus their
    cheapest-compatible cost bound; each is admitted when the winner set
    stays feasible and the exact marginal cost does not exceed their value.
    One repair pass then tries dropping each admitted consumer in ascending
    rank and greedily readmitting the rejected, keeping strict improvements.
    Scoring runs in floats for speed; the reported objective is exact.
    """
    view = _InstanceView(instance)
    N, M, L = view.N, view.M, view.L

    candidates = [n for n in range(N) if view.feasible_alone[n]]
    score = {n: float(view.w[n] - view.cheapest_bound[n]) for n in candidates}
    w_f = [float(v) for v in view.w]
    prices_f = [[float(p) for p in view.sorted_prices[l]] for l in range(L)]
    cumcost_f = [[float(c) for c in view.cumcost[l]] for l in range(L)]
    cumsup = view.cumsup

    def cost_f(l: int, demand: int) -> float:
        if demand == 0:
            return 0.0
        cs = cumsup[l]
        idx = bisect_left(cs, demand)
        return cumcost_f[l][idx - 1] + (demand - cs[idx - 1]) * prices_f[l][idx - 1]

    def marginal_cost_f(cumdem: list[list[int]], n: int) -> float:
        delta = 0.0
        for l in range(L):
            qn = view.q[n][l]
            if qn == 0:
                continue
            d = cumdem[l][M - 1] if M else 0
            delta += cost_f(l, d + qn) - cost_f(l, d)
        return delta

    order = sorted(candidates, key=lambda n: (-score[n], n))
    cumdem = view.new_state()
    admitted: list[int] = []
    admitted_set: set[int] = set()
    for n in order:
        if score[n] < 0.0:
            break
        if view.can_add(cumdem, n) and w_f[n] - marginal_cost_f(cumdem, n) >= -1e-9:
            view.add(cumdem, n)
            admitted.append(n)
            admitted_set.add(n)

    def objective_f() -> float:
        total = sum(w_f[n] for n in admitted_set)
        for l in range(L):
            total -= cost_f(l, cumdem[l][M - 1] if M else 0)
        return total

    rejected = [n for n in order if n not in admitted_set and score[n] >= 0.0]
    current_obj = objective_f()
    for a in sorted(admitted, key=lambda n: (score[n], n)):
        if a not in admitted_set:
            continue
        snapshot = [row[:] for row in cumdem]
        view.remove(cumdem, a)
        admitted_set.discard(a)
        gained: list[int] = []
        for r in rejected:
            if r in admitted_set:
                continue
            if view.can_add(cumdem, r) and w_f[r] - marginal_cost_f(cumdem, r) >= -1e-9:
                view.add(cumdem, r)
                admitted_set.add(r)
                gained.append(r)
        new_obj = objective_f()
        if new_obj > current_obj + 1e-9:
            current_obj = new_obj
            rejected = sorted(rejected + [a], key=lambda n: (-score[n], n))
        else:
            for row, saved in zip(cumdem, snapshot):
                row[:] = saved
            admitted_set.add(a)
            for g in gained:
                admitted_set.discard(g)

    winner_positions = sorted(admitted_set)
    root_bound = sum(view.optimistic, Fraction(0))
    solution = _build_solution(instance, winner_positions, optimality="heuristic")
    gap = max(Fraction(0), root_bound - solution.objective)
    return WdpSolution(
        allocation=solution.allocation,
        objective=solution.objective,
        total_utility=solution.total_utility,
        total_satisfaction=solution.total_satisfaction,
        optimality="heuristic",
        gap_bound=gap,
    )


def dump_instance(instance: WdpInstance) -> str:
    """Serialize an instance to the line-oriented debug format.

    One record per bid; rationals print as ``p`` or ``p/q`` and parse back
    bit-exactly.  See :func:`load_instance`.
    """
    lines = [
        f"market {instance.shape.num_consumers} {instance.shape.num_providers} "
        f"{instance.shape.num_resource_types}"
    ]
    for ext in instance.consumer_bids:
        prices = ",".join(str(p) for p in ext.bid.unit_prices)
        quantities = ",".join(str(q) for q in ext.bid.quantities)
        lines.append(
            f"consumer {ext.consumer_id} ff={ext.fairness_factor} "
            f"prices={prices} quantities={quantities}"
        )
    for pb in instance.provider_bids:
        prices = ",".join(str(p) for p in pb.unit_prices)
        quantities = ",".join(str(q) for q in pb.quantities)
        lines.append(f"provider {pb.provider_id} prices={prices} quantities={quantities}")
    return "\n".join(lines) + "\n"


def load_instance(text: str) -> WdpInstance:
    """Parse the format written by :func:`dump_instance`."""
    shape: Optional[MarketShape] = None
    consumers: list[ExtendedConsumerBid] = []
    providers: list[ProviderBid] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        kind = fields[0]
        try:
            if kind == "market":
                shape = MarketShape(int(fields[1]), int(fields[2]), int(fields[3]))
            elif kind in ("consumer", "provider"):
                entry_id = int(fields[1])
                kv = dict(f.split("=", 1) for f in fields[2:])
                prices = [Fraction(p) for p in kv["prices"].split(",")] if kv["prices"] else []
                quantities = (
                    [int(q) for q in kv["quantities"].split(",")] if kv["quantities"] else []
                )
                if kind == "consumer":
                    consumers.append(
                        ExtendedConsumerBid(
                            bid=ConsumerBid(entry_id, tuple(prices), tuple(quantities)),
                            fairness_factor=Fraction(kv.get("ff", "0")),
                        )
                    )
                else:
                    providers.append(ProviderBid(entry_id, tuple(prices), tuple(quantities)))
            else:
                raise ValueError(f"unknown record kind {kind!r}")
        except (IndexError, KeyError) as exc:
            raise ValueError(f"malformed instance record on line {lineno}: {raw!r}") from exc
    if shape is None:
        raise ValueError("instance text is missing the leading 'market N M L' record")
    return WdpInstance(
        shape=shape,
        consumer_bids=tuple(consumers),
        provider_bids=tuple(providers),
        budgets=tuple(budget(c.bid) for c in consumers),
    )


def budget_of(bid: ConsumerBid) -> Money:
    """Alias for :func:`faircda.model.budget`, re-exported for solver callers."""
    return budget(bid)

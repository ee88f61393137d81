"""Online assortment policies behind one decide() interface.

The simulation-based family shares a four-step skeleton: sample a
candidate assortment from the solved LP's offer distribution for the
realized (period, type), discard products by a per-kind rule, drop
products with no available units, then re-sample a sub-assortment so
every survivor is still chosen with exactly its LP-induced probability.
The kinds differ only in step two:

* SimRandom: discard each product by an independent coin with bias
  gamma (default: the minimizer gamma*(c_min) of the revenue-loss
  bound).
* SimInfusion: discard product i when the fee is below the optimistic
  per-unit threshold P[i, t, z].
* SimOptDis: discard when the fee is below the exact-stock marginal
  value Q[i, t, avail_i]; only sound when no unit ever returns, so
  preparation refuses instances with any finite duration.
* HybridI: a per-product mix fixed at preparation time by the ratio
  test R[i] + eps*(c_i) < 1 (coin if true, threshold otherwise).
* HybridII: be-the-leader over prepared candidate policies, re-picking
  the leader every switch_period periods by Monte-Carlo rollouts of the
  remaining horizon from the live inventory state.

Two LP-free baselines: GR offers the myopically optimal assortment
among available products; IB additionally scales each fee by the
penalty Psi(avail/c) = (e^(1-x) - e)/(1 - e) before the same oracle.
"""

from __future__ import annotations

import math
from bisect import bisect_right

import numpy as np

from .dp import ValueTables, epsilon_star
from .lp import LPSolution
from .model import Instance, offline_oracle
from .rng import generator_from_key
from .sampling import sub_assortment_sample
from .sim import InventoryState, _play, _runtime

KINDS = ("SimRandom", "SimInfusion", "SimOptDis", "HybridI", "HybridII", "IB", "GR")


class Policy:
    """Prepared, immutable decision rule; see decide()."""

    kind = "?"

    def new_state(self):
        """Fresh per-episode private state (None for stateless kinds)."""
        return None

    def decide(self, t: int, z: int, inv: InventoryState, streams, state=None):
        """Assortment to offer at period t to a type-z consumer.

        Returns a sorted tuple of product indices, every one of which
        has at least one available unit.
        """
        raise NotImplementedError


class _OfferSampler:
    """Inverse-CDF sampling over the LP columns of each (t, z) pair."""

    __slots__ = ("_grid",)

    def __init__(self, lp: LPSolution):
        tmax = max((t for t, _z in lp.pair_columns), default=0)
        zmax = max((z for _t, z in lp.pair_columns), default=0)
        self._grid: list[list] = [[None] * (zmax + 1) for _ in range(tmax + 1)]
        for (t, z), col_list in lp.pair_columns.items():
            sets = [S for S, _y, _p in col_list]
            phis = [p for _S, _y, p in col_list]
            cum = []
            acc = 0.0
            for _S, yk, _p in col_list:
                acc += yk
                cum.append(acc)
            self._grid[t][z] = (sets, phis, cum)

    def sample(self, t: int, z: int, u: float):
        grid = self._grid
        if t >= len(grid) or z >= len(grid[t]):
            return (), ()
        got = grid[t][z]
        if got is None:
            return (), ()
        sets, phis, cum = got
        idx = bisect_right(cum, u)
        if idx >= len(sets):
            idx = len(sets) - 1
        return sets[idx], phis[idx]


class _SimBased(Policy):
    """Common skeleton: sample, discard (subclass hook), post-process."""

    def __init__(self, instance: Instance, lp: LPSolution):
        self.instance = instance
        self.sampler = _OfferSampler(lp)
        self.models = [ct.choice for ct in instance.types]
        self.fees = [ct.fees.tolist() for ct in instance.types]

    def decide(self, t, z, inv, streams, state=None):
        S, phis = self.sampler.sample(t, z, streams.policy.random())
        if not S:
            return ()
        kept = self._discard(t, z, S, inv, streams)
        avail = inv.avail
        survivors = tuple(i for i in kept if avail[i] > 0)
        if not survivors:
            return ()
        if len(survivors) == len(S):
            return S
        targets = {i: p for i, p in zip(S, phis) if i in survivors}
        return sub_assortment_sample(self.models[z], survivors, targets, streams.policy)

    def _discard(self, t, z, S, inv, streams):
        raise NotImplementedError


class SimRandom(_SimBased):
    """Independent per-product discard coins with bias gamma."""

    kind = "SimRandom"

    def __init__(self, instance, lp, gamma: float):
        super().__init__(instance, lp)
        if not 0.0 <= gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {gamma}")
        self.gamma = gamma

    def _discard(self, t, z, S, inv, streams):
        coins = streams.policy.random(len(S))
        g = self.gamma
        return [i for i, cn in zip(S, coins) if cn >= g]


class SimInfusion(_SimBased):
    """Keep product i iff its fee reaches the optimistic threshold."""

    kind = "SimInfusion"

    def __init__(self, instance, lp, tables: ValueTables):
        super().__init__(instance, lp)
        self.P = tables.P.tolist()

    def _discard(self, t, z, S, inv, streams):
        fees = self.fees[z]
        P = self.P
        return [i for i in S if fees[i] >= P[i][t][z]]


class SimOptDis(_SimBased):
    """Keep product i iff its fee reaches the marginal value of the
    avail_i-th unit; requires a fully non-reusable instance."""

    kind = "SimOptDis"

    def __init__(self, instance, lp, tables: ValueTables):
        super().__init__(instance, lp)
        if not instance.is_fully_non_reusable():
            raise ValueError(
                "exact-stock thresholds assume units never return; "
                "this instance has a finite-duration type"
            )
        self.Q = {i: q.tolist() for i, q in tables.Q.items()}

    def _discard(self, t, z, S, inv, streams):
        fees = self.fees[z]
        avail = inv.avail
        Q = self.Q
        return [i for i in S if avail[i] >= 1 and fees[i] >= Q[i][t][avail[i]]]


class HybridI(_SimBased):
    """Coin rule for products whose optimistic-DP ratio is weak, the
    threshold rule for the rest; assignment fixed at preparation."""

    kind = "HybridI"

    def __init__(self, instance, lp, tables: ValueTables, gamma: float):
        super().__init__(instance, lp)
        if not 0.0 <= gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {gamma}")
        self.gamma = gamma
        self.P = tables.P.tolist()
        self.Q = {i: q.tolist() for i, q in tables.Q.items()}
        self.labels = {}
        for i in range(instance.n):
            eps_i, _g = epsilon_star(instance.c[i])
            if tables.R[i] + eps_i < 1.0:
                self.labels[i] = "random"
            elif instance.product_non_reusable(i):
                self.labels[i] = "threshold-stock"
            else:
                self.labels[i] = "threshold"

    def _discard(self, t, z, S, inv, streams):
        labels = self.labels
        coin_idx = [i for i in S if labels[i] == "random"]
        coins = iter(streams.policy.random(len(coin_idx))) if coin_idx else iter(())
        fees = self.fees[z]
        avail = inv.avail
        kept = []
        for i in S:
            lab = labels[i]
            if lab == "random":
                if next(coins) >= self.gamma:
                    kept.append(i)
            elif lab == "threshold-stock":
                if avail[i] >= 1 and fees[i] >= self.Q[i][t][avail[i]]:
                    kept.append(i)
            elif fees[i] >= self.P[i][t][z]:
                kept.append(i)
        return kept


class _RolloutStreams:
    """Stream bundle for rollouts: policy draws come from the rollout
    generator itself."""

    __slots__ = ("policy",)

    def __init__(self, gen):
        self.policy = gen


def estimate_future_revenue(
    candidate: Policy, instance: Instance, t: int, inv: InventoryState,
    mc_iters: int, streams, rollout_keys=None,
) -> float:
    """Mean revenue of mc_iters rollouts of periods t..T from inv.

    Rollouts draw from the episode's ROLLOUT substream (or from the
    explicit keys when the caller wants candidates to share draws), so
    running them never perturbs the main episode's environment.
    """
    if t > instance.T:
        return 0.0
    rt = _runtime(instance)
    total = 0.0
    for k in range(mc_iters):
        gen = generator_from_key(rollout_keys[k]) if rollout_keys is not None else streams.rollout
        u3 = gen.random((3, instance.T - t + 1))
        total += _play(rt, candidate, inv.copy(), t, u3, _RolloutStreams(gen), candidate.new_state())
    return total / mc_iters


class HybridII(Policy):
    """Be-the-leader over prepared candidates.

    The leader is picked before the first consumer and re-examined
    every switch_period periods (never, when switch_period is None):
    each candidate's future revenue from the live inventory is
    estimated with mc_iters rollouts and the best one takes over, ties
    favoring the earliest-listed candidate.
    """

    kind = "HybridII"

    def __init__(self, candidates, instance, switch_period, mc_iters, common_random_numbers=False):
        if not candidates:
            raise ValueError("need at least one candidate policy")
        if switch_period is not None and switch_period < 1:
            raise ValueError(f"switch_period must be >= 1 or None, got {switch_period}")
        self.candidates = list(candidates)
        self.instance = instance
        self.switch_period = switch_period
        self.mc_iters = int(mc_iters)
        self.common_random_numbers = bool(common_random_numbers)

    def new_state(self):
        return {"leader": None, "next_review": 1}

    def _review(self, t, inv, streams) -> Policy:
        keys = None
        if self.common_random_numbers:
            keys = [streams.fresh_rollout_key() for _ in range(self.mc_iters)]
        best = self.candidates[0]
        best_val = estimate_future_revenue(
            best, self.instance, t, inv, self.mc_iters, streams, keys
        )
        for cand in self.candidates[1:]:
            val = estimate_future_revenue(
                cand, self.instance, t, inv, self.mc_iters, streams, keys
            )
            if val > best_val:
                best, best_val = cand, val
        return best

    def decide(self, t, z, inv, streams, state=None):
        if state is None:
            raise ValueError("HybridII needs the per-episode state from new_state()")
        if state["leader"] is None or (
            self.switch_period is not None and t >= state["next_review"]
        ):
            state["leader"] = self._review(t, inv, streams)
            state["next_review"] = t + (self.switch_period or 0)
        return state["leader"].decide(t, z, inv, streams, None)


def _psi(x: float) -> float:
    return (math.exp(1.0 - x) - math.e) / (1.0 - math.e)


class _OracleBased(Policy):
    """Myopic assortment via the offline oracle on per-step weights."""

    def __init__(self, instance: Instance):
        self.instance = instance
        self.models = [ct.choice for ct in instance.types]
        self.fees = [ct.fees for ct in instance.types]

    def _weights(self, z, inv) -> np.ndarray:
        raise NotImplementedError

    def decide(self, t, z, inv, streams, state=None):
        w = self._weights(z, inv)
        return offline_oracle(self.models[z], w, self.instance.family)


class GR(_OracleBased):
    """Greedy: offer the revenue-maximizing assortment of available
    products, ignoring the future."""

    kind = "GR"

    def _weights(self, z, inv):
        w = np.full(self.instance.n, -1.0)
        avail = inv.avail
        fees = self.fees[z]
        for i in range(self.instance.n):
            if avail[i] > 0:
                w[i] = fees[i]
        return w


class IB(_OracleBased):
    """Inventory balancing: greedy on fees damped by Psi(avail/c)."""

    kind = "IB"

    def _weights(self, z, inv):
        w = np.full(self.instance.n, -1.0)
        avail = inv.avail
        fees = self.fees[z]
        c = self.instance.c
        for i in range(self.instance.n):
            if avail[i] > 0:
                w[i] = fees[i] * _psi(avail[i] / c[i])
        return w


def prepare(
    kind: str,
    instance: Instance,
    lp: LPSolution | None = None,
    tables: ValueTables | None = None,
    config: dict | None = None,
) -> Policy:
    """Build a ready-to-run policy of the given kind.

    config keys (all optional): gamma (default gamma*(c_min)),
    switch_period (default 10), mc_iters (default 20),
    common_random_numbers (default False).
    """
    config = dict(config or {})
    gamma = config.get("gamma")
    if gamma is None:
        gamma = epsilon_star(min(instance.c))[1]
    if kind in ("SimRandom", "SimInfusion", "SimOptDis", "HybridI", "HybridII"):
        if lp is None:
            raise ValueError(f"{kind} needs a solved LP")
    if kind in ("SimInfusion", "SimOptDis", "HybridI") and tables is None:
        raise ValueError(f"{kind} needs value tables")

    if kind == "SimRandom":
        return SimRandom(instance, lp, gamma)
    if kind == "SimInfusion":
        return SimInfusion(instance, lp, tables)
    if kind == "SimOptDis":
        return SimOptDis(instance, lp, tables)
    if kind == "HybridI":
        return HybridI(instance, lp, tables, gamma)
    if kind == "HybridII":
        if tables is None:
            raise ValueError("HybridII needs value tables for its candidates")
        candidates = [
            SimInfusion(instance, lp, tables),
            SimRandom(instance, lp, gamma),
        ]
        if instance.is_fully_non_reusable():
            candidates.append(SimOptDis(instance, lp, tables))
        return HybridII(
            candidates,
            instance,
            switch_period=config.get("switch_period", 10),
            mc_iters=config.get("mc_iters", 20),
            common_random_numbers=config.get("common_random_numbers", False),
        )
    if kind == "IB":
        return IB(instance)
    if kind == "GR":
        return GR(instance)
    raise ValueError(f"unknown policy kind {kind!r}; expected one of {KINDS}")

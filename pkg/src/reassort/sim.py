"""Episode engine and Monte-Carlo harness.

One episode is a pass over t = 1..T: units whose rental ends at t come
back first, then a consumer type is drawn, the policy picks an
assortment from the currently available products, the consumer picks at
most one product, and a sale draws a rental duration and schedules the
return (never, for INFINITE or past-horizon durations).

All environment uniforms of an episode (arrival, choice, duration; one
triple per period) are drawn up front as a single block from the ENV
substream. The block's size is fixed by the horizon alone, so the
environment's draws cannot depend on policy decisions: two policies
replayed on the same episode seed face the identical consumer sequence,
and policy-internal randomness (a different substream) cannot shift it.
Everything is deterministic in (instance, policy config, episode_seed).
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from weakref import WeakKeyDictionary

import numpy as np

from .model import INFINITE, MNL, OUTSIDE, Instance, choice_from_uniform
from .rng import Streams, env_uniforms, split


class InventoryState:
    """Available units, scheduled returns, and absorbed units per product.

    Conservation: avail[i] + pending returns + gone[i] == c[i] at all
    times, where gone counts units that will never return within the
    horizon (INFINITE duration or return time past T).
    """

    __slots__ = ("c", "avail", "pending", "gone")

    def __init__(self, c, avail, pending, gone):
        self.c = c
        self.avail = avail
        self.pending = pending
        self.gone = gone

    @classmethod
    def fresh(cls, c) -> "InventoryState":
        c = tuple(c)
        return cls(c, [ci for ci in c], [{} for _ in c], [0 for _ in c])

    def copy(self) -> "InventoryState":
        return InventoryState(
            self.c, list(self.avail), [dict(p) for p in self.pending], list(self.gone)
        )

    def release(self, t: int) -> None:
        """Return every unit scheduled to come back at period t."""
        for i, pend in enumerate(self.pending):
            if pend:
                got = pend.pop(t, None)
                if got is not None:
                    self.avail[i] += got

    def allocate(self, i: int, t: int, d: float, horizon: int) -> None:
        """Hand one unit of i out at period t for duration d."""
        assert self.avail[i] > 0, f"allocating product {i} with no units available"
        self.avail[i] -= 1
        if d == INFINITE or t + d > horizon:
            self.gone[i] += 1
        else:
            back = t + int(d)
            self.pending[i][back] = self.pending[i].get(back, 0) + 1

    def check(self, t: int) -> None:
        """Assert the conservation and timing invariants at period t."""
        for i, ci in enumerate(self.c):
            out = sum(self.pending[i].values())
            assert self.avail[i] >= 0
            assert self.avail[i] + out + self.gone[i] == ci, (
                f"product {i}: {self.avail[i]} + {out} + {self.gone[i]} != {ci}"
            )
            assert all(back > t for back in self.pending[i])


@dataclass(eq=False)
class EpisodeResult:
    """Episode revenue plus an optional per-step trace.

    Trace records are (t, type, offered, chosen, fee, duration); chosen
    is OUTSIDE and fee 0 with duration None when nothing was picked.
    """

    revenue: float
    trace: list[tuple] | None = None


@dataclass(eq=False)
class MCStats:
    """Aggregates of one policy's Monte-Carlo run revenues."""

    revenues: np.ndarray
    mean: float
    se: float
    median: float
    q1: float
    q3: float
    min: float
    max: float

    @classmethod
    def from_runs(cls, revenues) -> "MCStats":
        rev = np.asarray(revenues, dtype=np.float64)
        if rev.size == 0:
            raise ValueError("no runs to aggregate")
        se = float(rev.std(ddof=1) / math.sqrt(rev.size)) if rev.size > 1 else 0.0
        q1, med, q3 = (float(v) for v in np.percentile(rev, [25.0, 50.0, 75.0]))
        return cls(
            revenues=rev,
            mean=float(rev.mean()),
            se=se,
            median=med,
            q1=q1,
            q3=q3,
            min=float(rev.min()),
            max=float(rev.max()),
        )


class _Runtime:
    """Hot-loop views of an instance: cumulative arrival rows, per-type
    fee arrays, MNL weights, and duration inverse-CDF tables."""

    def __init__(self, instance: Instance):
        self.T = instance.T
        self.nz = instance.num_types
        self.arrival_cum = [row for row in np.cumsum(instance.arrival, axis=1).tolist()]
        self.fees = [ct.fees for ct in instance.types]
        self.models = [ct.choice for ct in instance.types]
        # (cumulative mass, durations) per (type, product); the tail past
        # the last entry is INFINITE, mirroring sample_from_uniform
        self.dur = [
            [(d._cum.tolist(), d._vals) for d in ct.durations] for ct in instance.types
        ]
        self.mnl = []
        for model in self.models:
            if isinstance(model, MNL):
                self.mnl.append((float(model.alpha0), model.alpha.tolist()))
            else:
                self.mnl.append(None)


_runtimes: WeakKeyDictionary = WeakKeyDictionary()


def _runtime(instance: Instance) -> _Runtime:
    rt = _runtimes.get(instance)
    if rt is None:
        rt = _Runtime(instance)
        _runtimes[instance] = rt
    return rt


def _play(rt: _Runtime, policy, inv: InventoryState, t_start: int, u3, streams, state, trace=None):
    """Run periods t_start..T on the given inventory; returns revenue.

    u3 is the pre-drawn environment block with one (arrival, choice,
    duration) uniform column per remaining period.
    """
    ua, uc, ud = u3[0].tolist(), u3[1].tolist(), u3[2].tolist()
    T = rt.T
    nz_last = rt.nz - 1
    revenue = 0.0
    for t in range(t_start, T + 1):
        k = t - t_start
        inv.release(t)
        u = ua[k]
        z = 0
        row = rt.arrival_cum[t - 1]
        while z < nz_last and u >= row[z]:
            z += 1
        offered = policy.decide(t, z, inv, streams, state)
        chosen = OUTSIDE
        if offered:
            avail = inv.avail
            for i in offered:
                assert avail[i] > 0, f"offered product {i} with no units available"
            fast = rt.mnl[z]
            u = uc[k]
            if fast is not None:
                alpha0, alpha = fast
                den = alpha0 + sum(alpha[i] for i in offered)
                if den > 0.0:
                    acc = 0.0
                    target = u * den
                    for i in offered:
                        acc += alpha[i]
                        if target < acc:
                            chosen = i
                            break
            else:
                chosen = choice_from_uniform(rt.models[z], offered, u)
        if chosen != OUTSIDE:
            fee = rt.fees[z][chosen]
            revenue += fee
            cum, vals = rt.dur[z][chosen]
            idx = bisect_right(cum, ud[k])
            d = vals[idx] if idx < len(vals) else INFINITE
            inv.allocate(chosen, t, d, T)
            if trace is not None:
                trace.append((t, z, offered, chosen, float(fee), d))
        elif trace is not None:
            trace.append((t, z, offered, OUTSIDE, 0.0, None))
    return revenue


def run_episode(instance: Instance, policy, episode_seed, keep_trace: bool = True) -> EpisodeResult:
    """One full episode; deterministic in (instance, policy, seed)."""
    rt = _runtime(instance)
    u3 = env_uniforms(episode_seed, (3, instance.T))
    streams = Streams(episode_seed)
    inv = InventoryState.fresh(instance.c)
    state = policy.new_state()
    trace = [] if keep_trace else None
    revenue = _play(rt, policy, inv, 1, u3, streams, state, trace)
    inv.check(instance.T + 1)
    return EpisodeResult(revenue=revenue, trace=trace)


def monte_carlo(instance: Instance, policy, n_runs: int, master_seed: int) -> MCStats:
    """n_runs independent episodes with per-run derived seeds.

    Run k's episode seed depends only on (master_seed, k), so results
    are identical no matter how runs are ordered or distributed. Each
    run is exactly run_episode(instance, policy, split(master_seed, k))
    with the trace and result wrapper skipped.
    """
    rt = _runtime(instance)
    c, T = instance.c, instance.T
    revenues = np.empty(n_runs)
    for run_id in range(n_runs):
        es = split(master_seed, run_id)
        inv = InventoryState.fresh(c)
        revenue = _play(
            rt, policy, inv, 1, env_uniforms(es, (3, T)), Streams(es), policy.new_state(), None
        )
        inv.check(T + 1)
        revenues[run_id] = revenue
    return MCStats.from_runs(revenues)


def clairvoyant_offline_ec21(T: int, episode_seed) -> float:
    """Offline oracle for the duration-1-or-never single-unit instance.

    Sees each period's realized duration before deciding: allocates
    whenever the duration would be 1 (the unit is back next period),
    and spends the unit unconditionally at the final period. Expected
    revenue is (T-1)/2 + 1 >= T/2.
    """
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    u3 = env_uniforms(episode_seed, (3, T))
    revenue = 1.0
    for u in u3[2, : T - 1].tolist():
        if u < 0.5:
            revenue += 1.0
    return revenue

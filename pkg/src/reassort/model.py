"""Domain types: rental durations, choice models, consumer types, instances.

Conventions used across the whole package:

* Products are indexed 0..n-1. An assortment is a sorted tuple of
  product indices; the empty tuple is the empty assortment.
* A unit allocated at period t with duration d is out during
  [t, t+d-1] and back on the shelf at t+d. Hence survival(k) = P(d > k)
  is exactly the probability that a unit allocated k periods ago is
  still out, and survival(0) = 1.
* INFINITE marks a duration that never ends (a non-reusable sale).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

INFINITE = math.inf

OUTSIDE = -1
"""Sentinel returned by sample_choice when the consumer buys nothing."""

_PROB_TOL = 1e-12


class DurationDist:
    """Distribution of a rental duration on {1, 2, ...} plus INFINITE.

    Parameters
    ----------
    entries : iterable of (duration, prob)
        Durations are integers >= 1 or INFINITE. Probabilities must be
        non-negative and sum to 1 within 1e-12. Repeated durations are
        merged.
    """

    __slots__ = ("entries", "finite_d", "finite_p", "inf_mass", "_suffix", "_cum", "_vals")

    def __init__(self, entries):
        finite: dict[int, float] = {}
        inf_mass = 0.0
        total = 0.0
        for d, p in entries:
            if p < -_PROB_TOL:
                raise ValueError(f"negative probability {p}")
            p = max(p, 0.0)
            total += p
            if d == INFINITE:
                inf_mass += p
            else:
                if d != int(d) or d < 1:
                    raise ValueError(f"finite durations must be integers >= 1, got {d}")
                finite[int(d)] = finite.get(int(d), 0.0) + p
        if abs(total - 1.0) > _PROB_TOL:
            raise ValueError(f"duration probabilities sum to {total}, expected 1")
        self.finite_d = np.array(sorted(finite), dtype=np.int64)
        self.finite_p = np.array([finite[d] for d in sorted(finite)], dtype=np.float64)
        self.inf_mass = inf_mass
        self.entries = tuple((int(d), finite[d]) for d in sorted(finite))
        if inf_mass > 0.0:
            self.entries += ((INFINITE, inf_mass),)
        # survival(k) = inf_mass + sum of finite mass strictly above k
        suffix = np.zeros(len(self.finite_d) + 1)
        suffix[:-1] = np.cumsum(self.finite_p[::-1])[::-1]
        self._suffix = suffix + inf_mass
        # inverse-CDF sampling arrays; INFINITE carries the tail
        self._cum = np.cumsum(self.finite_p)
        self._vals = [float(d) for d in self.finite_d]

    @classmethod
    def point_infinite(cls) -> "DurationDist":
        """The non-reusable case: the unit never comes back."""
        return cls([(INFINITE, 1.0)])

    @property
    def is_infinite_point(self) -> bool:
        return self.inf_mass >= 1.0 - _PROB_TOL

    def survival(self, k: int) -> float:
        """P(duration > k); equals 1 for all k on the INFINITE point mass."""
        if k < 0:
            return 1.0
        idx = int(np.searchsorted(self.finite_d, k, side="right"))
        return float(self._suffix[idx])

    def survival_array(self, kmax: int) -> np.ndarray:
        """Vector [survival(0), ..., survival(kmax)]."""
        ks = np.arange(kmax + 1)
        idx = np.searchsorted(self.finite_d, ks, side="right")
        return self._suffix[idx]

    def sample_from_uniform(self, u: float) -> float:
        """Map one uniform draw to a duration (INFINITE for the tail)."""
        idx = int(np.searchsorted(self._cum, u, side="right"))
        if idx >= len(self._vals):
            return INFINITE
        return self._vals[idx]

    def __repr__(self):
        return f"DurationDist({list(self.entries)!r})"


class MNL:
    """Multinomial-logit choice: prob(S, i) = alpha_i / (alpha0 + sum_S alpha).

    Weak substitutability holds automatically: adding a product only
    grows the denominator. Consideration sets are encoded as alpha_i = 0.
    """

    __slots__ = ("alpha0", "alpha", "n")

    def __init__(self, alpha0: float, alpha):
        alpha = np.asarray(alpha, dtype=np.float64)
        if alpha0 < 0 or np.any(alpha < 0):
            raise ValueError("MNL weights must be non-negative")
        self.alpha0 = float(alpha0)
        self.alpha = alpha
        self.n = len(alpha)

    def prob(self, S, i: int) -> float:
        if i < 0 or i >= self.n:
            raise IndexError(f"product {i} out of range")
        if i not in S:
            return 0.0
        denom = self.alpha0 + sum(self.alpha[j] for j in S)
        if denom <= 0.0:
            return 0.0
        return float(self.alpha[i]) / denom

    def __repr__(self):
        return f"MNL(alpha0={self.alpha0}, alpha={self.alpha.tolist()})"


class ExplicitTable:
    """Tabulated choice probabilities, for small test fixtures.

    The table maps frozenset(S) -> {i: prob}. On construction with
    n <= 10 the weak-substitutability inequalities and the unit-mass
    bound are checked exhaustively over the stored sets; larger tables
    are trusted as documented.
    """

    __slots__ = ("table", "n")

    def __init__(self, n: int, table: dict):
        self.n = n
        norm: dict[frozenset, dict[int, float]] = {}
        for S, row in table.items():
            fs = frozenset(S)
            norm[fs] = {int(i): float(p) for i, p in row.items()}
            for i in norm[fs]:
                if i not in fs:
                    raise ValueError(f"probability stored for {i} outside set {sorted(fs)}")
        norm.setdefault(frozenset(), {})
        self.table = norm
        if n <= 10:
            self._check_substitutability()

    def _check_substitutability(self):
        for S, row in self.table.items():
            mass = sum(row.values())
            if mass > 1.0 + _PROB_TOL:
                raise ValueError(f"choice mass {mass} > 1 on set {sorted(S)}")
            for p in row.values():
                if p < -_PROB_TOL:
                    raise ValueError("negative choice probability")
            for j in range(self.n):
                if j in S:
                    continue
                bigger = S | {j}
                if bigger not in self.table:
                    continue
                for i in S:
                    if self.prob(S, i) < self.prob(bigger, i) - _PROB_TOL:
                        raise ValueError(
                            f"substitutability violated: prob({sorted(S)},{i}) < "
                            f"prob({sorted(bigger)},{i})"
                        )

    def prob(self, S, i: int) -> float:
        if i < 0 or i >= self.n:
            raise IndexError(f"product {i} out of range")
        fs = frozenset(S)
        if i not in fs:
            return 0.0
        try:
            row = self.table[fs]
        except KeyError:
            raise KeyError(f"set {sorted(fs)} not present in choice table") from None
        return row.get(i, 0.0)

    def __repr__(self):
        return f"ExplicitTable(n={self.n}, sets={len(self.table)})"


ChoiceModel = MNL | ExplicitTable


def choice_prob(model: ChoiceModel, S, i: int) -> float:
    """Probability that a consumer offered assortment S picks product i."""
    return model.prob(S, i)


@dataclass(frozen=True)
class FeasibleFamily:
    """Downward-closed family of offerable assortments.

    max_size None means all subsets; an integer caps the cardinality.
    The empty set is always feasible.
    """

    max_size: int | None = None

    @classmethod
    def all_subsets(cls) -> "FeasibleFamily":
        return cls(None)

    @classmethod
    def max_cardinality(cls, k: int) -> "FeasibleFamily":
        if k < 0:
            raise ValueError("cardinality bound must be >= 0")
        return cls(k)

    def is_feasible(self, S) -> bool:
        return self.max_size is None or len(S) <= self.max_size

    def feasible_sets(self, products):
        """All feasible subsets of the given products, as sorted tuples."""
        products = sorted(products)
        top = len(products) if self.max_size is None else min(self.max_size, len(products))
        for size in range(top + 1):
            yield from itertools.combinations(products, size)


@dataclass(eq=False)
class ConsumerType:
    """One consumer type: its choice model, rental fees, and durations."""

    id: int | str
    choice: ChoiceModel
    fees: np.ndarray
    durations: tuple[DurationDist, ...]

    def __post_init__(self):
        self.fees = np.asarray(self.fees, dtype=np.float64)
        if np.any(self.fees < 0):
            raise ValueError(f"type {self.id}: fees must be non-negative")
        if len(self.fees) != self.choice.n or len(self.durations) != self.choice.n:
            raise ValueError(f"type {self.id}: fee/duration vectors must have length n")


@dataclass(eq=False)
class Instance:
    """A full problem instance.

    arrival[t-1, z] is the probability that type z arrives at period t;
    each row sums to 1. Types with zero probability at t simply cannot
    arrive then.
    """

    n: int
    c: tuple[int, ...]
    T: int
    types: tuple[ConsumerType, ...]
    arrival: np.ndarray
    family: FeasibleFamily = field(default_factory=FeasibleFamily.all_subsets)

    def __post_init__(self):
        self.c = tuple(int(x) for x in self.c)
        self.types = tuple(self.types)
        self.arrival = np.asarray(self.arrival, dtype=np.float64)
        if self.T < 1:
            raise ValueError("horizon must be >= 1")
        if len(self.c) != self.n or any(x < 1 for x in self.c):
            raise ValueError("inventories must be positive, one per product")
        if self.arrival.shape != (self.T, len(self.types)):
            raise ValueError(
                f"arrival matrix must be (T, #types) = ({self.T}, {len(self.types)}), "
                f"got {self.arrival.shape}"
            )
        if np.any(self.arrival < -_PROB_TOL):
            raise ValueError("arrival probabilities must be non-negative")
        rowsum = self.arrival.sum(axis=1)
        bad = np.flatnonzero(np.abs(rowsum - 1.0) > _PROB_TOL)
        if bad.size:
            t = int(bad[0])
            raise ValueError(f"arrival row {t + 1} sums to {rowsum[t]}, expected 1")
        for ct in self.types:
            if ct.choice.n != self.n or len(ct.fees) != self.n:
                raise ValueError(f"type {ct.id} sized for a different product count")

    @property
    def num_types(self) -> int:
        return len(self.types)

    def is_fully_non_reusable(self) -> bool:
        """True when every duration of every type is the INFINITE point mass."""
        return all(d.is_infinite_point for ct in self.types for d in ct.durations)

    def product_non_reusable(self, i: int) -> bool:
        return all(ct.durations[i].is_infinite_point for ct in self.types)


def _set_value(model: ChoiceModel, S, weights) -> float:
    return sum(weights[i] * model.prob(S, i) for i in S)


def _mnl_prefix_best(model: MNL, weights, candidates) -> tuple[tuple[int, ...], float]:
    """Best assortment over weight-ordered prefixes (MNL, unconstrained).

    For MNL the optimum of sum_i w_i prob(S, i) over all subsets is a
    superlevel set {i : w_i >= cutoff}, so scanning prefixes of the
    weight-descending order finds it.
    """
    order = sorted(candidates, key=lambda i: (-weights[i], i))
    alpha = model.alpha
    best_set: tuple[int, ...] = ()
    best_val = 0.0
    num = 0.0
    den = model.alpha0
    for k, i in enumerate(order):
        num += weights[i] * alpha[i]
        den += alpha[i]
        if den <= 0.0:
            continue
        val = num / den
        if val > best_val:
            best_val = val
            best_set = tuple(sorted(order[: k + 1]))
    return best_set, best_val


def offline_oracle(model: ChoiceModel, weights, family: FeasibleFamily) -> tuple[int, ...]:
    """Feasible assortment maximizing sum_i weights_i * prob(S, i).

    Products with negative weight are dropped up front (removing one
    never hurts under substitutability and downward closure). MNL with
    an unconstrained family uses the prefix fast path; everything else
    enumerates feasible subsets of at most 20 remaining products.
    Ties break to the smallest set, then lexicographically.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if len(weights) != model.n:
        raise ValueError("one weight per product required")
    candidates = [i for i in range(model.n) if weights[i] >= 0.0]
    if isinstance(model, MNL) and family.max_size is None:
        positive = [i for i in candidates if weights[i] > 0.0 and model.alpha[i] > 0.0]
        best_set, _ = _mnl_prefix_best(model, weights, positive)
        return best_set
    if len(candidates) > 20:
        raise ValueError(
            f"{len(candidates)} candidate products is too many for exhaustive enumeration"
        )
    best: tuple[float, int, tuple[int, ...]] | None = None
    for S in family.feasible_sets(candidates):
        val = _set_value(model, S, weights)
        key = (-val, len(S), S)
        if best is None or key < best:
            best = key
    return best[2]


def sample_choice(model: ChoiceModel, S, rng: np.random.Generator):
    """Realize one consumer choice from assortment S.

    Returns a product index with its choice probability, or OUTSIDE.
    """
    return choice_from_uniform(model, S, rng.random())


def choice_from_uniform(model: ChoiceModel, S, u: float):
    """Inverse-CDF choice: products in ascending index order, then OUTSIDE."""
    acc = 0.0
    for i in sorted(S):
        acc += model.prob(S, i)
        if u < acc:
            return i
    return OUTSIDE


# ---------------------------------------------------------------------------
# JSON serialization


def instance_to_json(instance: Instance) -> dict:
    """Plain-JSON form of an instance. Durations use "inf" for INFINITE."""
    types = []
    for ct in instance.types:
        td = {
            "id": ct.id,
            "fees": ct.fees.tolist(),
            "durations": [
                [["inf" if d == INFINITE else int(d), p] for d, p in dd.entries]
                for dd in ct.durations
            ],
        }
        if isinstance(ct.choice, MNL):
            td["alpha0"] = ct.choice.alpha0
            td["alpha"] = ct.choice.alpha.tolist()
        else:
            td["table"] = [
                [sorted(S), {str(i): p for i, p in row.items()}]
                for S, row in sorted(ct.choice.table.items(), key=lambda kv: sorted(kv[0]))
            ]
        types.append(td)
    fam = instance.family
    family = "all_subsets" if fam.max_size is None else {"kind": "max_cardinality", "k": fam.max_size}
    return {
        "n": instance.n,
        "T": instance.T,
        "c": list(instance.c),
        "types": types,
        "arrival": instance.arrival.tolist(),
        "family": family,
    }


def instance_from_json(doc: dict) -> Instance:
    """Inverse of instance_to_json; validates via the type constructors."""
    types = []
    n = int(doc["n"])
    for td in doc["types"]:
        durations = tuple(
            DurationDist([(INFINITE if d == "inf" else int(d), float(p)) for d, p in pairs])
            for pairs in td["durations"]
        )
        if "table" in td:
            choice = ExplicitTable(
                n, {frozenset(S): {int(i): float(p) for i, p in row.items()} for S, row in td["table"]}
            )
        else:
            choice = MNL(float(td["alpha0"]), td["alpha"])
        types.append(
            ConsumerType(
                id=td["id"],
                choice=choice,
                fees=np.asarray(td["fees"], dtype=np.float64),
                durations=durations,
            )
        )
    fam = doc.get("family", "all_subsets")
    if fam == "all_subsets":
        family = FeasibleFamily.all_subsets()
    elif isinstance(fam, dict) and fam.get("kind") == "max_cardinality":
        family = FeasibleFamily.max_cardinality(int(fam["k"]))
    else:
        raise ValueError(f"unknown feasible family {fam!r}")
    return Instance(
        n=n,
        c=tuple(doc["c"]),
        T=int(doc["T"]),
        types=tuple(types),
        arrival=np.asarray(doc["arrival"], dtype=np.float64),
        family=family,
    )


def save_instance(instance: Instance, path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_json(instance), fh, indent=1)


def load_instance(path) -> Instance:
    with open(path) as fh:
        return instance_from_json(json.load(fh))

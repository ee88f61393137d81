"""Recursive sub-assortment sampling with exact selection marginals.

Given an assortment S and per-product targets p_i <= prob(S, i), the
sampler returns a random subset S~ of S such that

    E[prob(S~, i)] = p_i            for every i in S.

It sorts the ratios p_i / prob(S, i) in descending order, turns the
sorted ratios into telescoping prefix weights, samples a prefix, and
recurses on it with fresh targets prob(S, i). Ratio of a product with
prob(S, i) = 0 is defined as 1. Recursion depth is at most |S| because
a sampled proper prefix is strictly smaller.
"""

from __future__ import annotations

from .model import ChoiceModel

_TOL = 1e-12


def _ordered_ratios(model: ChoiceModel, S, targets):
    """Products of S sorted by descending target/prob ratio (ties by index)."""
    items = []
    for i in S:
        phi = model.prob(S, i)
        p = targets[i]
        if p < -_TOL:
            raise ValueError(f"target for product {i} is negative: {p}")
        if p > phi + _TOL:
            raise ValueError(
                f"target {p} exceeds choice probability {phi} for product {i}; "
                "caller violated the sampling precondition"
            )
        ratio = 1.0 if phi <= 0.0 else min(p / phi, 1.0)
        items.append((i, ratio))
    items.sort(key=lambda it: (-it[1], it[0]))
    return items


def _prefix_weights(items):
    """Telescoping weights q_0..q_m over prefixes of the sorted order."""
    m = len(items)
    q = [1.0 - items[0][1]]
    for j in range(m - 1):
        q.append(items[j][1] - items[j + 1][1])
    q.append(items[m - 1][1])
    for j, qj in enumerate(q):
        if qj < -_TOL:
            raise AssertionError(f"prefix weight q_{j} = {qj} < 0")
        if qj < 0.0:
            q[j] = 0.0
    total = sum(q)
    if abs(total - 1.0) > 1e-9:
        raise AssertionError(f"prefix weights sum to {total}")
    return q


def sub_assortment_sample(model: ChoiceModel, S, targets, rng) -> tuple[int, ...]:
    """Sample a subset of S hitting the target marginals exactly.

    Parameters
    ----------
    model : ChoiceModel
        Weak-substitutable choice model.
    S : iterable of int
        The assortment to thin.
    targets : mapping int -> float
        Desired E[prob(S~, i)], at most prob(S, i) (tolerance 1e-12).
    rng : numpy Generator
        Stream for the recursive prefix draws.
    """
    S = tuple(sorted(S))
    while True:
        if not S:
            return ()
        items = _ordered_ratios(model, S, targets)
        if items[-1][1] >= 1.0:
            return S
        q = _prefix_weights(items)
        u = rng.random()
        acc = 0.0
        jstar = len(q) - 1
        for j, qj in enumerate(q):
            acc += qj
            if u < acc:
                jstar = j
                break
        if jstar == 0:
            return ()
        if jstar == len(S):
            return S
        prefix = tuple(sorted(i for i, _ in items[:jstar]))
        targets = {i: model.prob(S, i) for i in prefix}
        S = prefix


def enumerate_sample_distribution(model: ChoiceModel, S, targets):
    """Exact output distribution of sub_assortment_sample.

    Expands the full recursion tree (|S| <= 8 guard) and returns a list
    of (subset, probability) pairs sorted by subset, probabilities
    summing to 1. Serves as the test oracle for the sampler.
    """
    S = tuple(sorted(S))
    if len(S) > 8:
        raise ValueError(f"enumeration guard: |S| = {len(S)} > 8")
    out: dict[tuple[int, ...], float] = {}

    def recurse(S, targets, mass):
        if mass <= 0.0:
            return
        if not S:
            out[()] = out.get((), 0.0) + mass
            return
        items = _ordered_ratios(model, S, targets)
        if items[-1][1] >= 1.0:
            out[S] = out.get(S, 0.0) + mass
            return
        q = _prefix_weights(items)
        out[()] = out.get((), 0.0) + mass * q[0]
        out[S] = out.get(S, 0.0) + mass * q[-1]
        for j in range(1, len(S)):
            if q[j] <= 0.0:
                continue
            prefix = tuple(sorted(i for i, _ in items[:j]))
            recurse(prefix, {i: model.prob(S, i) for i in prefix}, mass * q[j])

    recurse(S, dict(targets), 1.0)
    return sorted((subset, p) for subset, p in out.items() if p > 0.0)

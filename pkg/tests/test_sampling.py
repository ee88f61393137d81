"""Sub-assortment sampling: exact output distributions, marginal exactness,
and the prefix-weight invariants."""

import numpy as np
import pytest

from reassort.model import MNL
from reassort.sampling import enumerate_sample_distribution, sub_assortment_sample


def test_full_targets_return_whole_set():
    mnl = MNL(1.0, [1.0, 2.0, 3.0])
    S = (0, 1, 2)
    targets = {i: mnl.prob(S, i) for i in S}
    dist = enumerate_sample_distribution(mnl, S, targets)
    assert dist == [(S, 1.0)]
    rng = np.random.default_rng(1)
    for _ in range(50):
        assert sub_assortment_sample(mnl, S, targets, rng) == S


def test_singleton_base_case():
    mnl = MNL(1.0, [1.0])
    phi = mnl.prob((0,), 0)
    dist = dict(enumerate_sample_distribution(mnl, (0,), {0: 0.5 * phi}))
    assert dist[(0,)] == pytest.approx(0.5, abs=1e-12)
    assert dist[()] == pytest.approx(0.5, abs=1e-12)


def test_two_product_worked_example():
    mnl = MNL(1.0, [1.0, 1.0])
    S = (0, 1)
    dist = dict(enumerate_sample_distribution(mnl, S, {0: 1.0 / 3.0, 1: 1.0 / 6.0}))
    assert dist[(0, 1)] == pytest.approx(0.5, abs=1e-12)
    assert dist[(0,)] == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert dist[()] == pytest.approx(1.0 / 6.0, abs=1e-12)
    assert (1,) not in dist


def random_targets(mnl, S, rng):
    return {i: float(rng.uniform(0.0, 1.0)) * mnl.prob(S, i) for i in S}


def test_marginals_exact_on_random_fixtures():
    rng = np.random.default_rng(20240813)
    for _ in range(200):
        n = int(rng.integers(1, 7))
        mnl = MNL(rng.uniform(0.05, 1.5), rng.uniform(0.05, 2.0, n))
        S = tuple(sorted(rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False)))
        targets = random_targets(mnl, S, rng)
        dist = enumerate_sample_distribution(mnl, S, targets)
        total = 0.0
        for sub, p in dist:
            assert p > 0.0
            assert set(sub) <= set(S)
            total += p
        assert abs(total - 1.0) <= 1e-12
        for i in S:
            marg = sum(p * mnl.prob(sub, i) for sub, p in dist)
            assert abs(marg - targets[i]) <= 1e-12


def test_zero_target_products_can_vanish():
    mnl = MNL(1.0, [1.0, 1.0])
    S = (0, 1)
    dist = enumerate_sample_distribution(mnl, S, {0: mnl.prob(S, 0), 1: 0.0})
    marg0 = sum(p * mnl.prob(sub, 0) for sub, p in dist)
    marg1 = sum(p * mnl.prob(sub, 1) for sub, p in dist)
    assert abs(marg0 - mnl.prob(S, 0)) <= 1e-12
    assert marg1 <= 1e-12


def test_sampler_draws_match_enumeration():
    rng = np.random.default_rng(77)
    mnl = MNL(0.5, [1.0, 0.7, 1.3])
    S = (0, 1, 2)
    targets = random_targets(mnl, S, rng)
    dist = dict(enumerate_sample_distribution(mnl, S, targets))
    n_draws = 100_000
    counts = {}
    for _ in range(n_draws):
        sub = sub_assortment_sample(mnl, S, targets, rng)
        counts[sub] = counts.get(sub, 0) + 1
    for sub, p in dist.items():
        freq = counts.get(sub, 0) / n_draws
        se = np.sqrt(p * (1.0 - p) / n_draws)
        assert abs(freq - p) <= 4.0 * se + 1e-9, (sub, freq, p)
    extras = set(counts) - set(dist)
    assert not extras


def test_target_validation():
    mnl = MNL(1.0, [1.0])
    with pytest.raises(ValueError, match="negative"):
        sub_assortment_sample(mnl, (0,), {0: -0.01}, np.random.default_rng(0))
    with pytest.raises(ValueError, match="exceeds"):
        sub_assortment_sample(mnl, (0,), {0: 0.6}, np.random.default_rng(0))


def test_empty_set():
    mnl = MNL(1.0, [1.0])
    assert sub_assortment_sample(mnl, (), {}, np.random.default_rng(0)) == ()
    assert enumerate_sample_distribution(mnl, (), {}) == [((), 1.0)]


def test_enumeration_guard():
    mnl = MNL(1.0, np.ones(9))
    S = tuple(range(9))
    targets = {i: 0.0 for i in S}
    with pytest.raises(ValueError, match="enumeration guard"):
        enumerate_sample_distribution(mnl, S, targets)

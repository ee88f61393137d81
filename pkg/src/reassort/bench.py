"""Instance generators: the randomized benchmark family and two
hand-built instances with known LP values.

`gen_ec8` reproduces the numerical study's design: 6 products, 6
consumer types with nested consideration sets (type j considers
products 1..j), MNL weights near 1 with a 10% outside option, fees and
rental means scaled by eta(j, kappa) = 1 + 2*kappa*(6-j)/5, and
arrival probabilities concentrating around per-type peak times as
kappa grows (kappa = 0 is uniform i.i.d. types).

`gen_footnote9` and `gen_ec21` are single-product instances whose LP
optima have closed forms (2 - eps and 2*(1 - 2^-T)), used as exact
fixtures by the tests and the `canonical` CLI subcommand.
"""

from __future__ import annotations

import math

import numpy as np

from .model import (
    INFINITE,
    ConsumerType,
    DurationDist,
    FeasibleFamily,
    Instance,
    MNL,
)

NO_RENTAL = "NO_RENTAL"
RENTAL = "RENTAL"


def _eta(j: int, kappa: float) -> float:
    return 1.0 + 2.0 * kappa * (6 - j) / 5.0


def _truncated_geometric(base: int, mean: float, T: int) -> DurationDist:
    """Distribution of base + X, X geometric on {1, 2, ...} with the
    given mean, truncated at T with the residual mass never returning."""
    p = 1.0 / mean
    entries = []
    total = 0.0
    for d in range(base + 1, T + 1):
        pd = (1.0 - p) ** (d - base - 1) * p
        entries.append((d, pd))
        total += pd
    entries.append((INFINITE, max(0.0, 1.0 - total)))
    return DurationDist(entries)


def gen_ec8(
    kappa: float,
    scenario: str,
    instance_seed: int,
    T: int = 300,
    c: int | None = None,
) -> Instance:
    """One draw from the benchmark family; deterministic in all arguments.

    T and c default to the study's values (T = 300, c = 30 without
    rentals, 20 with); smaller overrides keep the same draw sequence,
    so a scaled-down instance shares its fees and weights with the
    full-size one at the same seed.
    """
    if kappa < 0.0:
        raise ValueError(f"kappa must be >= 0, got {kappa}")
    if scenario not in (NO_RENTAL, RENTAL):
        raise ValueError(f"scenario must be {NO_RENTAL} or {RENTAL}, got {scenario!r}")
    n = 6
    if c is None:
        c = 30 if scenario == NO_RENTAL else 20
    scen_id = 0 if scenario == NO_RENTAL else 1
    kappa_bits = int(np.float64(kappa).view(np.uint64))
    rng = np.random.default_rng([int(instance_seed), scen_id, kappa_bits])

    base = T // 10
    types = []
    for j in range(1, n + 1):
        alpha = np.zeros(n)
        alpha[:j] = rng.uniform(0.9, 1.1, size=j)
        alpha0 = (0.1 / 0.9) * float(alpha.sum())
        eta = _eta(j, kappa)
        fees = np.sort(rng.uniform(10.0 * eta, 25.0 * eta, size=n))[::-1].copy()
        if scenario == RENTAL:
            mean_j = rng.uniform(20.0 * _eta(7 - j, kappa), 30.0 * _eta(7 - j, kappa))
            dist = _truncated_geometric(base, mean_j, T)
        else:
            dist = DurationDist.point_infinite()
        types.append(
            ConsumerType(
                id=j - 1,
                choice=MNL(alpha0=alpha0, alpha=alpha),
                fees=fees,
                durations=(dist,) * n,
            )
        )

    tau = T / 6.0
    peaks = np.array([(6 - j) * tau + 1.0 for j in range(1, n + 1)])
    tgrid = np.arange(1, T + 1, dtype=float)[:, None]
    W = np.exp(-0.001 * kappa * np.abs(tgrid - peaks[None, :]))
    arrival = W / W.sum(axis=1, keepdims=True)

    return Instance(
        n=n,
        c=(int(c),) * n,
        T=T,
        types=tuple(types),
        arrival=arrival,
        family=FeasibleFamily.all_subsets(),
    )


def gen_footnote9(eps: float) -> Instance:
    """Two periods, one unit: a certain fee-1 request now, then with
    probability eps a fee-1/eps request. LP value 2 - eps; no online
    policy beats expected revenue 1."""
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must be in (0, 1], got {eps}")
    inf = (DurationDist.point_infinite(),)
    sure = ConsumerType(
        id=0, choice=MNL(alpha0=0.0, alpha=np.array([1.0])), fees=np.array([1.0]), durations=inf
    )
    big = ConsumerType(
        id=1,
        choice=MNL(alpha0=0.0, alpha=np.array([1.0])),
        fees=np.array([1.0 / eps]),
        durations=inf,
    )
    nobody = ConsumerType(
        id=2, choice=MNL(alpha0=1.0, alpha=np.array([0.0])), fees=np.array([0.0]), durations=inf
    )
    arrival = np.array([[1.0, 0.0, 0.0], [0.0, eps, 1.0 - eps]])
    return Instance(
        n=1,
        c=(1,),
        T=2,
        types=(sure, big, nobody),
        arrival=arrival,
        family=FeasibleFamily.all_subsets(),
    )


def gen_ec21(T: int) -> Instance:
    """One fee-1 product, one unit, duration 1 or never-returns with
    probability 1/2 each, a certain request every period. LP value
    2*(1 - 2^-T) approaches 2 while every online policy is capped
    well below it."""
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    dist = DurationDist([(1, 0.5), (INFINITE, 0.5)])
    ct = ConsumerType(
        id=0,
        choice=MNL(alpha0=0.0, alpha=np.array([1.0])),
        fees=np.array([1.0]),
        durations=(dist,),
    )
    arrival = np.ones((T, 1))
    return Instance(
        n=1,
        c=(1,),
        T=T,
        types=(ct,),
        arrival=arrival,
        family=FeasibleFamily.all_subsets(),
    )


def ec21_lp_value(T: int) -> float:
    """Closed form for gen_ec21's LP optimum."""
    return 2.0 * (1.0 - math.pow(2.0, -T))

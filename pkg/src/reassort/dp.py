"""Value tables the simulation policies consult.

Two backward inductions, both driven by the solved LP's offer masses
X = y * F_t(z) rather than by the true inventory process:

* optimistic per-unit table V[i, t]: imagines product i's stock
  refilled every period, so a single unit's revenue-to-go does not
  depend on how many units are out. Accepting a request at fee r beats
  discarding exactly when r >= P[i, t, z], where the threshold

      P[i, t, z] = V[i, t+1] - sum_d g_i^z(d) V[i, t+d]

  discounts the continuation by the return-time distribution. Never
  returning (INFINITE duration, or return past the horizon) contributes
  zero continuation.

* inventory-aware table E[i, t, I] for non-reusable products only,
  where stock only shrinks and I tracks it exactly. Its acceptance
  threshold is the marginal value Q[i, t, I] = E[i, t+1, I] -
  E[i, t+1, I-1].

Also here: the discard-rate optimization epsilon_star(x) giving the
revenue-loss bound and its minimizing coin bias for a capacity-x
product, and hybrid_ratio, the per-product score R[i] = c_i V[i,1] /
contrib[i] the first hybrid policy uses to pick a rule per product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lp import LPSolution
from .model import Instance


@dataclass(eq=False)
class ValueTables:
    """Everything the policies precompute from one LP solution.

    V has shape (n, T+2) with V[:, T+1] = 0 and column 0 unused; P has
    shape (n, T+2, Z). E and Q are keyed by product (non-reusable ones
    only), each an array of shape (T+2, c_i+1). R is the per-product
    hybrid ratio.
    """

    V: np.ndarray
    P: np.ndarray
    E: dict[int, np.ndarray] = field(default_factory=dict)
    Q: dict[int, np.ndarray] = field(default_factory=dict)
    R: np.ndarray | None = None


def offer_mass(instance: Instance, lp: LPSolution) -> np.ndarray:
    """M[i, t, z] = sum_S y_{S,t,z} phi^z(S, i), shape (n, T+1, Z)."""
    M = np.zeros((instance.n, instance.T + 1, instance.num_types))
    for (t, z), col_list in lp.pair_columns.items():
        for S, yk, phis in col_list:
            for i, p in zip(S, phis):
                M[i, t, z] += yk * p
    return M


def optimistic_dp(instance: Instance, lp: LPSolution) -> tuple[np.ndarray, np.ndarray]:
    """Backward induction of the replenished-inventory table.

    Returns (V, P); see ValueTables for shapes. Ties r == P accept.
    """
    n, T, Z = instance.n, instance.T, instance.num_types
    M = offer_mass(instance, lp)
    F = instance.arrival
    V = np.zeros((n, T + 2))
    P = np.zeros((n, T + 2, Z))
    for i in range(n):
        ci = instance.c[i]
        fin = []
        for z in range(Z):
            dist = instance.types[z].durations[i]
            fin.append((np.asarray(dist.finite_d), np.asarray(dist.finite_p)))
        Vi = V[i]
        for t in range(T, 0, -1):
            vnext = Vi[t + 1]
            gain = 0.0
            for z in range(Z):
                ds, ps = fin[z]
                k = np.searchsorted(ds, T + 1 - t, side="right")
                cont = float(ps[:k] @ Vi[t + ds[:k]]) if k else 0.0
                P[i, t, z] = vnext - cont
                f = F[t - 1, z]
                if f > 0.0:
                    r = instance.types[z].fees[i]
                    if r >= P[i, t, z]:
                        gain += f * M[i, t, z] * (r - P[i, t, z])
            Vi[t] = vnext + gain / ci
    return V, P


def inventory_dp(
    instance: Instance, lp: LPSolution, products=None
) -> tuple[dict[int, np.ndarray], dict[int, np.ndarray]]:
    """Exact-stock backward induction for non-reusable products.

    Every duration of every type for each requested product must be the
    INFINITE point mass; a reusable product raises ValueError. Returns
    ({i: E_i}, {i: Q_i}) with E_i, Q_i of shape (T+2, c_i+1); Q rows
    are filled for t in [1, T] and column 0 stays 0.
    """
    if products is None:
        products = range(instance.n)
    products = list(products)
    for i in products:
        if not instance.product_non_reusable(i):
            raise ValueError(
                f"product {i} has a finite-duration type; "
                "the exact-stock table only applies when units never return"
            )
    T, Z = instance.T, instance.num_types
    M = offer_mass(instance, lp)
    F = instance.arrival
    E: dict[int, np.ndarray] = {}
    Q: dict[int, np.ndarray] = {}
    for i in products:
        ci = instance.c[i]
        Ei = np.zeros((T + 2, ci + 1))
        Qi = np.zeros((T + 2, ci + 1))
        for t in range(T, 0, -1):
            nxt = Ei[t + 1]
            q = nxt[1:] - nxt[:-1]
            Qi[t, 1:] = q
            acc = np.zeros(ci)
            for z in range(Z):
                f = F[t - 1, z]
                if f > 0.0 and M[i, t, z] > 0.0:
                    r = instance.types[z].fees[i]
                    acc += f * M[i, t, z] * np.maximum(0.0, r - q)
            Ei[t, 1:] = nxt[1:] + acc
        E[i] = Ei
        Q[i] = Qi
    return E, Q


def _discard_objective(gamma: float, x: float) -> float:
    if gamma >= 1.0:
        return 1.0
    return 1.0 - (1.0 - gamma) * (1.0 - math.exp(-gamma * gamma * x / (2.0 - gamma)))


def epsilon_star(x: float) -> tuple[float, float]:
    """Best revenue-loss bound for coin-flip discarding at capacity x.

    Minimizes 1 - (1-g)(1-exp(-g^2 x / (2-g))) over the coin bias
    g in [0, 1]: a 1001-point grid pass, then golden-section refinement
    of the bracketing interval down to width 1e-9. Returns
    (minimum value, minimizer).
    """
    if x < 0.0:
        raise ValueError(f"capacity argument must be >= 0, got {x}")
    grid = np.linspace(0.0, 1.0, 1001)
    # vectorized form of _discard_objective; g = 1 gives exactly 1.0
    vals = 1.0 - (1.0 - grid) * (1.0 - np.exp(-grid * grid * x / (2.0 - grid)))
    k = int(np.argmin(vals))
    lo = grid[max(0, k - 2)]
    hi = grid[min(1000, k + 2)]
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c1 = b - invphi * (b - a)
    c2 = a + invphi * (b - a)
    f1, f2 = _discard_objective(c1, x), _discard_objective(c2, x)
    while b - a > 1e-9:
        if f1 <= f2:
            b, c2, f2 = c2, c1, f1
            c1 = b - invphi * (b - a)
            f1 = _discard_objective(c1, x)
        else:
            a, c1, f1 = c1, c2, f2
            c2 = a + invphi * (b - a)
            f2 = _discard_objective(c2, x)
    gstar = 0.5 * (a + b)
    best = _discard_objective(gstar, x)
    if vals[k] < best:
        best, gstar = vals[k], grid[k]
    return float(best), float(gstar)


def hybrid_ratio(instance: Instance, lp: LPSolution, V: np.ndarray) -> np.ndarray:
    """R[i] = c_i V[i,1] / contrib[i]; 1 by convention when contrib is 0."""
    R = np.ones(instance.n)
    for i in range(instance.n):
        if lp.contrib[i] > 0.0:
            R[i] = instance.c[i] * V[i, 1] / lp.contrib[i]
    return R


def build_tables(instance: Instance, lp: LPSolution) -> ValueTables:
    """Optimistic table always; exact-stock tables where they apply."""
    V, P = optimistic_dp(instance, lp)
    non_reusable = [i for i in range(instance.n) if instance.product_non_reusable(i)]
    E, Q = inventory_dp(instance, lp, non_reusable) if non_reusable else ({}, {})
    R = hybrid_ratio(instance, lp, V)
    return ValueTables(V=V, P=P, E=E, Q=Q, R=R)


def tables_to_json(tables: ValueTables) -> dict:
    """Plain-JSON dump of every table, for debugging."""
    return {
        "V": tables.V.tolist(),
        "P": tables.P.tolist(),
        "E": {str(i): e.tolist() for i, e in tables.E.items()},
        "Q": {str(i): q.tolist() for i, q in tables.Q.items()},
        "R": tables.R.tolist() if tables.R is not None else None,
    }

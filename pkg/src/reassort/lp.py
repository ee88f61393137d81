"""Expected-inventory LP benchmark via column-and-row generation.

The LP has one variable y_{S,t,z} per (period, type, assortment) giving
the probability that assortment S is offered to a type-z consumer at
period t. Its value upper-bounds every online policy:

    max  sum F_t(z) r_i^z phi^z(S,i) y_{S,t,z}
    s.t. sum_{tau<=t} F_tau(z) survival_i^z(t-tau) phi^z(S,i) y  <= c_i   (inventory)
         sum_S y_{S,t,z} <= 1                                             (convexity)
         y >= 0

Exponentially many columns are handled by pricing: given inventory
duals theta and convexity duals lam, the best column for (t, z) solves
an offline assortment problem with per-product weights

    Rhat_i = F_t(z) (r_i^z - sum_{tau>=t} survival_i^z(tau-t) theta_{i,tau}),

one oracle call per (t, z); negative-weight products can be dropped.
Inventory rows are generated lazily too: a row (i, t) enters only after
its plugged-back usage exceeds c_i. At exit no priced column improves
and no row is violated, which certifies optimality.

`solve_expected_lp` solves restricted masters with scipy's HiGHS;
`full_enumeration_lp` materializes every column and row and solves the
whole thing with the in-repo dense simplex, giving an independent
cross-check of both formulation and backend.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .model import MNL, FeasibleFamily, Instance, offline_oracle
from .simplex import simplex_solve

_Y_CLIP = 1e-9


class LPIterationLimit(RuntimeError):
    """Generation loop hit max_iters; carries the best bounds seen."""

    def __init__(self, primal: float, dual_bound: float, iters: int):
        super().__init__(
            f"column/row generation did not converge in {iters} rounds; "
            f"primal {primal:.6f}, dual bound {dual_bound:.6f}"
        )
        self.primal = primal
        self.dual_bound = dual_bound


@dataclass(frozen=True)
class LPColumn:
    """One LP variable: offer assortment S to type z at period t."""

    t: int
    z: int
    S: tuple[int, ...]


@dataclass(eq=False)
class LPSolution:
    """Solved benchmark: columns with mass, duals, per-product revenue.

    theta[i, t] (t = 1..T) are inventory duals, lam[t, z] convexity
    duals; index 0 of the time axis is unused padding. pair_columns maps
    (t, z) to its [(S, y, phis)] list including the empty-set padding,
    with mass summing to 1, and is what the policies sample from.
    """

    objective: float
    columns: list[tuple[LPColumn, float]]
    theta: np.ndarray
    lam: np.ndarray
    contrib: np.ndarray
    pair_columns: dict[tuple[int, int], list[tuple[tuple[int, ...], float, tuple[float, ...]]]]


class _Prep:
    """Per-instance arrays shared by both solvers and the DP tables."""

    def __init__(self, instance: Instance):
        self.instance = instance
        T, Z, n = instance.T, instance.num_types, instance.n
        self.F = instance.arrival
        self.pairs = [
            (t, z) for t in range(1, T + 1) for z in range(Z) if self.F[t - 1, z] > 0.0
        ]
        # survival[z][i][k] = P(duration of product i under type z > k), k = 0..T-1
        self.sv = [
            [ct.durations[i].survival_array(T - 1) for i in range(n)] for ct in instance.types
        ]
        self.fees = [ct.fees for ct in instance.types]
        self.models = [ct.choice for ct in instance.types]
        self.mnl = all(isinstance(m, MNL) for m in self.models)
        self._phi_cache: dict[tuple[int, tuple[int, ...]], tuple[float, ...]] = {}

    def phis(self, z: int, S: tuple[int, ...]) -> tuple[float, ...]:
        key = (z, S)
        got = self._phi_cache.get(key)
        if got is None:
            model = self.models[z]
            got = tuple(model.prob(S, i) for i in S)
            self._phi_cache[key] = got
        return got


def _column_objective(prep: _Prep, t: int, z: int, S: tuple[int, ...], phis) -> float:
    fees = prep.fees[z]
    return float(prep.F[t - 1, z]) * sum(fees[i] * p for i, p in zip(S, phis))


def _usage_matrix_from(prep: _Prep, cols, y) -> np.ndarray:
    """Expected units of product i out at each period, given column mass y."""
    instance = prep.instance
    usage = np.zeros((instance.n, instance.T))
    for (t, z, S, _obj, phis), yk in zip(cols, y):
        if yk <= 0.0:
            continue
        f = prep.F[t - 1, z] * yk
        for i, p in zip(S, phis):
            if p > 0.0:
                usage[i, t - 1 :] += (f * p) * prep.sv[z][i][: instance.T - t + 1]
    return usage


def _price_pair_generic(prep: _Prep, t, z, sdot_row, lam_tz):
    """One oracle call for pair (t, z) under current duals."""
    instance = prep.instance
    w = prep.fees[z] - sdot_row
    S = offline_oracle(prep.models[z], w, instance.family)
    if not S:
        return None
    phis = prep.phis(z, S)
    val = sum(w[i] * p for i, p in zip(S, phis))
    rc = prep.F[t - 1, z] * val - lam_tz
    return S, phis, rc


def solve_expected_lp(instance: Instance, opts: dict | None = None) -> LPSolution:
    """Solve the benchmark LP by column-and-row generation.

    opts: reduced_cost_tol (default 1e-7), row_violation_tol (default
    1e-7), max_iters (default 100 generation rounds).
    """
    opts = dict(opts or {})
    rc_tol = float(opts.pop("reduced_cost_tol", 1e-7))
    row_tol = float(opts.pop("row_violation_tol", 1e-7))
    max_iters = int(opts.pop("max_iters", 100))
    if opts:
        raise ValueError(f"unknown options {sorted(opts)}")

    prep = _Prep(instance)
    T, Z, n = instance.T, instance.num_types, instance.n
    F = prep.F
    # For a product no type ever returns, usage is nondecreasing in t,
    # so the period-T row dominates the whole group; generate only it.
    last_row_only = [instance.product_non_reusable(i) for i in range(n)]

    cols: list[tuple[int, int, tuple[int, ...], float, tuple[float, ...]]] = []
    col_of: dict[tuple[int, int, tuple[int, ...]], int] = {}
    obj_list: list[float] = []
    zero_streak: list[int] = []
    rows_b: list[float] = []
    conv_of: dict[tuple[int, int], int] = {}
    inv_of: dict[tuple[int, int], int] = {}
    coo_r: list[int] = []
    coo_c: list[int] = []
    coo_v: list[float] = []
    # per (i, z): parallel lists of (column index, column period, F*phi_i),
    # so a late-arriving inventory row can be priced against old columns fast
    buckets: list[list[tuple[list[int], list[int], list[float]]]] = [
        [([], [], []) for _ in range(Z)] for _ in range(n)
    ]

    def add_column(t, z, S, phis):
        k = len(cols)
        cols.append((t, z, S, _column_objective(prep, t, z, S, phis), phis))
        col_of[(t, z, S)] = k
        obj_list.append(cols[k][3])
        zero_streak.append(0)
        pair = (t, z)
        if pair not in conv_of:
            conv_of[pair] = len(rows_b)
            rows_b.append(1.0)
        coo_r.append(conv_of[pair])
        coo_c.append(k)
        coo_v.append(1.0)
        f = F[t - 1, z]
        for i, p in zip(S, phis):
            if p <= 0.0:
                continue
            bc, bt, bf = buckets[i][z]
            bc.append(k)
            bt.append(t)
            bf.append(f * p)
            svzi = prep.sv[z][i]
            for (ii, tau), r in inv_of.items():
                if ii == i and tau >= t:
                    coo_r.append(r)
                    coo_c.append(k)
                    coo_v.append(f * p * svzi[tau - t])

    def add_inv_row(i, tau):
        r = len(rows_b)
        inv_of[(i, tau)] = r
        rows_b.append(float(instance.c[i]))
        for z in range(Z):
            bc, bt, bf = buckets[i][z]
            if not bc:
                continue
            tarr = np.asarray(bt)
            mask = tarr <= tau
            if not mask.any():
                continue
            idx = np.flatnonzero(mask)
            svzi = prep.sv[z][i]
            vals = np.asarray(bf)[idx] * svzi[tau - tarr[idx]]
            for k, v in zip(np.asarray(bc)[idx], vals):
                coo_r.append(r)
                coo_c.append(int(k))
                coo_v.append(float(v))

    def solve_master():
        if not cols:
            return np.zeros(0), {}, {}
        A = sparse.coo_matrix(
            (coo_v, (coo_r, coo_c)), shape=(len(rows_b), len(cols))
        ).tocsc()
        res = linprog(
            c=-np.asarray(obj_list),
            A_ub=A,
            b_ub=np.asarray(rows_b),
            method="highs",
        )
        if res.status != 0:
            raise AssertionError(f"restricted master failed: {res.message}")
        for k, yk in enumerate(res.x):
            zero_streak[k] = 0 if yk > 0.0 else zero_streak[k] + 1
        marg = res.ineqlin.marginals
        lam = {pair: max(0.0, -float(marg[r])) for pair, r in conv_of.items()}
        theta = {it: max(0.0, -float(marg[r])) for it, r in inv_of.items()}
        return res.x, lam, theta

    def purge_columns():
        """Drop columns at zero in two consecutive solves.

        Removing a zero-mass column never changes the master optimum or
        its duals; a purged set can always be priced back in later.
        """
        keep = [k for k, s in enumerate(zero_streak) if s < 2]
        if len(keep) == len(cols):
            return
        remap = np.full(len(cols), -1, dtype=np.int64)
        remap[keep] = np.arange(len(keep))
        cols[:] = [cols[k] for k in keep]
        obj_list[:] = [obj_list[k] for k in keep]
        zero_streak[:] = [zero_streak[k] for k in keep]
        col_of.clear()
        col_of.update({(t, z, S): k for k, (t, z, S, _o, _p) in enumerate(cols)})
        cc = remap[np.asarray(coo_c)]
        live = cc >= 0
        coo_c[:] = cc[live].tolist()
        coo_r[:] = np.asarray(coo_r)[live].tolist()
        coo_v[:] = np.asarray(coo_v)[live].tolist()
        for i in range(n):
            for z in range(Z):
                bc, bt, bf = buckets[i][z]
                if not bc:
                    continue
                bcc = remap[np.asarray(bc)]
                blive = bcc >= 0
                bc[:] = bcc[blive].tolist()
                bt[:] = np.asarray(bt)[blive].tolist()
                bf[:] = np.asarray(bf)[blive].tolist()

    def price_all(lam, theta):
        """Best column per (t, z); returns additions and the max reduced cost."""
        found = []
        max_rc = 0.0
        theta_by_i: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for (i, tau), th in theta.items():
            if th > 0.0:
                theta_by_i[i].append((tau, th))
        for z in range(Z):
            t_idx = np.flatnonzero(F[:, z] > 0.0)
            if not t_idx.size:
                continue
            sdot = np.zeros((T, n))
            for i in range(n):
                svzi = prep.sv[z][i]
                for tau, th in theta_by_i[i]:
                    sdot[:tau, i] += th * svzi[tau - 1 :: -1][:tau]
            model = prep.models[z]
            if isinstance(model, MNL) and instance.family.max_size is None:
                adds = _price_type_mnl(prep, z, t_idx, sdot, lam)
            else:
                adds = []
                for ti in t_idx:
                    t = int(ti) + 1
                    got = _price_pair_generic(prep, t, z, sdot[ti], lam.get((t, z), 0.0))
                    if got is not None:
                        adds.append((t, z, got[0], got[1], got[2]))
            for t, zz, S, phis, rc in adds:
                max_rc = max(max_rc, rc)
                if rc > rc_tol and (t, zz, S) not in col_of:
                    found.append((t, zz, S, phis))
        return found, max_rc

    y = np.zeros(0)
    lam: dict = {}
    theta: dict = {}
    max_rc = 0.0
    max_violation = 0.0
    primal_val = 0.0
    for _round in range(max_iters):
        y, lam, theta = solve_master()
        primal_val = float(np.asarray(obj_list) @ y) if len(y) else 0.0
        usage = _usage_matrix_from(prep, cols, y)
        excess = usage - np.asarray(instance.c, dtype=float)[:, None]
        new_rows = set()
        max_violation = float(excess.max(initial=0.0))
        for i, ti in zip(*np.nonzero(excess > row_tol)):
            tau = T if last_row_only[i] else int(ti) + 1
            if (int(i), tau) not in inv_of:
                new_rows.add((int(i), tau))
        new_cols, max_rc = price_all(lam, theta)
        if not new_rows and not new_cols:
            break
        if len(cols) > 3000 and sum(s >= 2 for s in zero_streak) > len(cols) // 3:
            purge_columns()
        for i, tau in sorted(new_rows):
            add_inv_row(i, tau)
        for t, z, S, phis in new_cols:
            add_column(t, z, S, phis)
    else:
        bound = sum(lam.values()) + sum(
            instance.c[i] * th for (i, _t), th in theta.items()
        )
        raise LPIterationLimit(primal_val, bound, max_iters)

    assert max_rc <= rc_tol + 1e-12 or not cols
    assert max_violation <= row_tol + 1e-12

    theta_full = np.zeros((n, T + 1))
    for (i, tau), th in theta.items():
        theta_full[i, tau] = th
    lam_full = np.zeros((T + 1, Z))
    for (t, z), lv in lam.items():
        lam_full[t, z] = lv
    return _finalize(prep, cols, y, theta_full, lam_full)


def _price_type_mnl(prep: _Prep, z, t_idx, sdot, lam):
    """Vectorized pricing for one MNL type over all its periods.

    The argmax set is a prefix of products ordered by decreasing
    adjusted weight w_i = r_i - sdot_i (invariant to the positive factor
    F_t(z)), so a cumulative-sum scan finds it for every t at once.
    """
    instance = prep.instance
    model = prep.models[z]
    alpha = model.alpha
    cand = np.flatnonzero(alpha > 0.0)
    out = []
    if not cand.size:
        return out
    w_all = prep.fees[z][None, cand] - sdot[np.ix_(t_idx, cand)]
    order = np.argsort(-w_all, axis=1, kind="stable")
    w_ord = np.take_along_axis(w_all, order, axis=1)
    a_ord = alpha[cand][order]
    pos = w_ord > 0.0
    num = np.cumsum(w_ord * a_ord * pos, axis=1)
    den = model.alpha0 + np.cumsum(a_ord, axis=1)
    vals = np.where(pos, num / den, -np.inf)
    F = prep.F
    for r, ti in enumerate(t_idx):
        t = int(ti) + 1
        npos = int(pos[r].sum())
        if npos == 0:
            continue
        k = int(np.argmax(vals[r, :npos]))
        best = float(vals[r, k])
        if best <= 0.0:
            continue
        S = tuple(sorted(int(cand[j]) for j in order[r, : k + 1]))
        rc = float(F[ti, z]) * best - lam.get((t, z), 0.0)
        out.append((t, z, S, prep.phis(z, S), rc))
    return out


def full_enumeration_lp(instance: Instance) -> LPSolution:
    """Solve the benchmark with every column and row materialized.

    Uses the in-repo dense simplex. Guarded to
    |feasible sets| * T * |types| <= 50,000.
    """
    prep = _Prep(instance)
    T, Z, n = instance.T, instance.num_types, instance.n
    all_sets = list(instance.family.feasible_sets(range(n)))
    if len(all_sets) * T * Z > 50_000:
        raise ValueError(
            f"enumeration guard exceeded: {len(all_sets)} sets x T={T} x {Z} types"
        )
    cols = []
    for t, z in prep.pairs:
        for S in all_sets:
            if not S:
                continue
            cols.append((t, z, S, _column_objective(prep, t, z, S, prep.phis(z, S)), prep.phis(z, S)))

    n_conv = len(prep.pairs)
    conv_of = {pair: r for r, pair in enumerate(prep.pairs)}
    n_rows = n_conv + n * T
    A = np.zeros((n_rows, len(cols)))
    b = np.empty(n_rows)
    b[:n_conv] = 1.0
    for k, (t, z, S, _obj, phis) in enumerate(cols):
        A[conv_of[(t, z)], k] = 1.0
        f = prep.F[t - 1, z]
        for i, p in zip(S, phis):
            if p <= 0.0:
                continue
            rows = n_conv + i * T
            A[rows + t - 1 : rows + T, k] = f * p * prep.sv[z][i][: T - t + 1]
    for i in range(n):
        b[n_conv + i * T : n_conv + (i + 1) * T] = instance.c[i]

    res = simplex_solve(A, b, [c[3] for c in cols], sense="max")
    theta_full = np.zeros((n, T + 1))
    for i in range(n):
        theta_full[i, 1:] = res.duals[n_conv + i * T : n_conv + (i + 1) * T]
    lam_full = np.zeros((T + 1, Z))
    for (t, z), r in conv_of.items():
        lam_full[t, z] = res.duals[r]
    return _finalize(prep, cols, res.x, theta_full, lam_full)


def _finalize(prep: _Prep, cols, y, theta_full, lam_full) -> LPSolution:
    """Clip mass, pad the empty set to total mass 1, tabulate duals."""
    instance = prep.instance
    by_pair: dict[tuple[int, int], list[tuple[tuple[int, ...], float, tuple[float, ...]]]] = {
        pair: [] for pair in prep.pairs
    }
    contrib = np.zeros(instance.n)
    objective = 0.0
    for (t, z, S, obj_k, phis), yk in zip(cols, y):
        yk = float(yk)
        if yk < -_Y_CLIP:
            raise AssertionError(f"column mass {yk} below clip tolerance")
        if yk <= 0.0:
            continue
        by_pair[(t, z)].append((S, yk, phis))
        objective += obj_k * yk
        f = prep.F[t - 1, z] * yk
        fees = prep.fees[z]
        for i, p in zip(S, phis):
            contrib[i] += f * p * fees[i]

    columns: list[tuple[LPColumn, float]] = []
    for pair in prep.pairs:
        t, z = pair
        mass = sum(yk for _S, yk, _p in by_pair[pair])
        if mass > 1.0 + 1e-8:
            raise AssertionError(f"pair {pair} has mass {mass} > 1")
        pad = max(0.0, 1.0 - mass)
        by_pair[pair].append(((), pad, ()))
        for S, yk, _p in by_pair[pair]:
            columns.append((LPColumn(t=t, z=z, S=S), yk))
    return LPSolution(
        objective=float(objective),
        columns=columns,
        theta=theta_full,
        lam=lam_full,
        contrib=contrib,
        pair_columns=by_pair,
    )


def plug_back_usage(instance: Instance, sol: LPSolution, i: int, t: int) -> float:
    """Expected units of product i out at period t under the LP masses."""
    total = 0.0
    for col, yk in sol.columns:
        if yk <= 0.0 or col.t > t or i not in col.S:
            continue
        ct = instance.types[col.z]
        phi = ct.choice.prob(col.S, i)
        total += instance.arrival[col.t - 1, col.z] * ct.durations[i].survival(t - col.t) * phi * yk
    return total


def usage_matrix(instance: Instance, sol: LPSolution) -> np.ndarray:
    """plug_back_usage for every (i, t), vectorized; shape (n, T)."""
    prep = _Prep(instance)
    cols = []
    y = []
    for col, yk in sol.columns:
        if not col.S:
            continue
        cols.append((col.t, col.z, col.S, 0.0, prep.phis(col.z, col.S)))
        y.append(yk)
    return _usage_matrix_from(prep, cols, np.asarray(y))


def check_lp_solution(instance: Instance, sol: LPSolution) -> None:
    """Assert the solution invariants: mass, feasibility, bookkeeping."""
    for pair, col_list in sol.pair_columns.items():
        mass = sum(yk for _S, yk, _p in col_list)
        if abs(mass - 1.0) > 1e-9:
            raise AssertionError(f"pair {pair} mass {mass} != 1 after padding")
        for _S, yk, _p in col_list:
            if yk < 0.0:
                raise AssertionError(f"negative column mass {yk} at {pair}")
    usage = usage_matrix(instance, sol)
    worst = float((usage - np.asarray(instance.c, dtype=float)[:, None]).max())
    if worst > 1e-6:
        raise AssertionError(f"plug-back violation {worst}")
    if abs(float(sol.contrib.sum()) - sol.objective) > 1e-8 * max(1.0, abs(sol.objective)):
        raise AssertionError("per-product contributions do not add to the objective")
    dual_value = float(
        sol.lam.sum() + (np.asarray(instance.c, dtype=float)[:, None] * sol.theta[:, 1:]).sum()
    )
    if sol.objective > dual_value + 1e-5 * max(1.0, abs(sol.objective)):
        raise AssertionError(f"weak duality violated: {sol.objective} > {dual_value}")


def lp_solution_to_json(sol: LPSolution) -> dict:
    """Plain-JSON export: objective, contributions, columns, duals."""
    return {
        "objective": sol.objective,
        "contrib": sol.contrib.tolist(),
        "columns": [
            {"t": col.t, "z": col.z, "S": list(col.S), "y": yk} for col, yk in sol.columns
        ],
        "duals": {
            "theta": sol.theta[:, 1:].tolist(),
            "lambda": sol.lam[1:].tolist(),
        },
    }

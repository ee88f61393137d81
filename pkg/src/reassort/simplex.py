"""Dense two-phase primal simplex on tableaus, with duals.

Solves
    max / min   c . x
    subject to  A x <= b,   x >= 0
by the textbook method: phase 1 introduces artificials for rows with
negative right-hand side, phase 2 optimizes the real objective. Pivot
entries below 1e-9 are never eligible. Degenerate pivoting flips the
rule to Bland's (smallest index) after a stall, which guarantees
termination. Duals are recovered for every row; for a `max` problem
they are the usual non-negative multipliers with b . y = objective at
optimality, and for `min` the signs flip.

Small and deliberately simple: the column-generation path uses a
production LP backend, and this solver independently cross-checks it on
fully materialized instances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-9
_STALL_LIMIT = 30


class SimplexError(Exception):
    pass


class SimplexInfeasible(SimplexError):
    pass


class SimplexUnbounded(SimplexError):
    pass


class SimplexIterationLimit(SimplexError):
    pass


@dataclass
class SimplexResult:
    x: np.ndarray
    duals: np.ndarray
    objective: float


def _pivot(tab, objrow, basis, r, j):
    piv = tab[r, j]
    tab[r] /= piv
    col = tab[:, j].copy()
    col[r] = 0.0
    tab -= np.outer(col, tab[r])
    objrow -= objrow[j] * tab[r]
    basis[r] = j


def _iterate(tab, objrow, basis, ncols, max_iters, phase):
    """Run primal simplex to optimality on the current tableau."""
    iters = 0
    stall = 0
    bland = False
    while True:
        rc = objrow[:ncols]
        if bland:
            ent = -1
            for j in range(ncols):
                if rc[j] > PIVOT_TOL:
                    ent = j
                    break
            if ent < 0:
                return iters
        else:
            ent = int(np.argmax(rc))
            if rc[ent] <= PIVOT_TOL:
                return iters
        col = tab[:, ent]
        rhs = tab[:, -1]
        eligible = col > PIVOT_TOL
        if not np.any(eligible):
            if phase == 1:
                raise SimplexError("phase-1 objective unbounded; inconsistent tableau")
            raise SimplexUnbounded("objective unbounded above")
        ratios = np.where(eligible, rhs / np.where(eligible, col, 1.0), np.inf)
        best = np.min(ratios)
        ties = np.flatnonzero(ratios <= best + 1e-12)
        # smallest leaving variable index on ties aids anti-cycling
        leave = int(ties[np.argmin(basis[ties])])
        degenerate = best <= 1e-12
        before = objrow[-1]
        _pivot(tab, objrow, basis, leave, ent)
        iters += 1
        if iters >= max_iters:
            raise SimplexIterationLimit(f"no optimum within {max_iters} pivots")
        if degenerate and abs(objrow[-1] - before) <= 1e-12:
            stall += 1
            if stall >= _STALL_LIMIT:
                bland = True
        else:
            stall = 0
            bland = False


def simplex_solve(a_ub, b_ub, objective, sense: str = "max", max_iters: int | None = None) -> SimplexResult:
    """Solve max/min objective . x subject to a_ub @ x <= b_ub, x >= 0.

    Returns the optimal basic solution, one dual per constraint row, and
    the optimal objective value. Raises SimplexInfeasible,
    SimplexUnbounded, or SimplexIterationLimit.
    """
    A = np.asarray(a_ub, dtype=np.float64)
    b = np.asarray(b_ub, dtype=np.float64).ravel()
    c = np.asarray(objective, dtype=np.float64).ravel()
    if A.ndim != 2:
        raise ValueError("constraint matrix must be 2-D")
    m, n = A.shape
    if len(b) != m or len(c) != n:
        raise ValueError("inconsistent constraint/objective dimensions")
    if sense not in ("max", "min"):
        raise ValueError(f"sense must be 'max' or 'min', got {sense!r}")
    if sense == "min":
        res = simplex_solve(A, b, -c, "max", max_iters)
        return SimplexResult(res.x, -res.duals, -res.objective)
    if max_iters is None:
        max_iters = max(2000, 50 * (m + n))

    # stored equalities: row i is A_i x + s_i = b_i, negated when b_i < 0
    negated = b < 0
    Aeq = np.hstack([A, np.eye(m)])
    beq = b.copy()
    Aeq[negated] *= -1.0
    beq[negated] *= -1.0
    art_rows = np.flatnonzero(negated)
    n_art = len(art_rows)
    nv = n + m

    tab = np.zeros((m, nv + n_art + 1))
    tab[:, :nv] = Aeq
    tab[:, -1] = beq
    basis = np.empty(m, dtype=np.int64)
    for i in range(m):
        basis[i] = n + i
    for k, i in enumerate(art_rows):
        tab[i, nv + k] = 1.0
        basis[i] = nv + k

    row_of = np.arange(m)  # original row -> current tableau row (-1 dropped)

    if n_art:
        c1 = np.zeros(nv + n_art)
        c1[nv:] = -1.0
        objrow = np.concatenate([c1, [0.0]])
        for i in range(m):
            objrow -= c1[basis[i]] * tab[i]
        _iterate(tab, objrow, basis, nv + n_art, max_iters, phase=1)
        # the stored entry is +sum of artificials, not the (negated) objective
        if objrow[-1] > 1e-7:
            raise SimplexInfeasible(f"phase-1 infeasibility {objrow[-1]:.3e}")
        # pivot lingering artificials out, or drop their (redundant) rows
        drop = []
        for r in range(m):
            if basis[r] < nv:
                continue
            j = -1
            for jj in range(nv):
                if abs(tab[r, jj]) > PIVOT_TOL:
                    j = jj
                    break
            if j >= 0:
                _pivot(tab, objrow, basis, r, j)
            else:
                drop.append(r)
        if drop:
            keep = np.setdiff1d(np.arange(m), drop)
            tab = tab[keep]
            basis = basis[keep]
            new_row = {int(old): k for k, old in enumerate(keep)}
            row_of = np.array([new_row.get(i, -1) for i in range(m)])
        tab = np.hstack([tab[:, :nv], tab[:, -1:]])

    c2 = np.concatenate([c, np.zeros(m)])
    objrow = np.concatenate([c2, [0.0]])
    for r in range(tab.shape[0]):
        objrow -= c2[basis[r]] * tab[r]
    _iterate(tab, objrow, basis, nv, max_iters, phase=2)

    x_full = np.zeros(nv)
    for r in range(tab.shape[0]):
        x_full[basis[r]] = tab[r, -1]
    x = x_full[:n]

    # duals: solve B^T y = c_B on the stored (possibly negated) rows
    duals = np.zeros(m)
    live = row_of >= 0
    if np.any(live):
        rows = np.flatnonzero(live)
        B = Aeq[np.ix_(rows, basis)]
        cB = c2[basis]
        try:
            y = np.linalg.solve(B.T, cB)
        except np.linalg.LinAlgError:
            y, *_ = np.linalg.lstsq(B.T, cB, rcond=None)
        duals[rows] = y
    duals[negated] *= -1.0

    return SimplexResult(x=x, duals=duals, objective=float(c @ x))

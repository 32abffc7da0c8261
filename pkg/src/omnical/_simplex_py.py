"""Pure numpy dense-simplex kernel for the per-round prediction game.

Solves, over distributions psi on the N grid points,

    minimize  cost . psi + sum_i s_i
    s.t.      sum_g psi_g = 1
              dmat[i] . psi + s_i - r_i = 0      (one row per free coordinate)
              psi, s, r >= 0

which is the epigraph form of  cost . psi + sum_i max(0, -dmat[i] . psi).

Every arithmetic step after tableau construction is elementwise with
first-index (Dantzig) or smallest-basis-index (Bland) tie-breaking, and
updates are applied unconditionally even for zero factors, so the compiled
backend in _simplex_cy.pyx reproduces this implementation bit for bit.
"""

from __future__ import annotations

import numpy as np

_TOL = 1e-11


class SolverError(RuntimeError):
    pass


def solve_game_lp(cost: np.ndarray, dmat: np.ndarray):
    """Return (psi, value, iterations).

    cost has shape (N,), dmat (m, N) with m >= 0. The returned psi is a
    basic optimal solution, so it has at most m + 1 nonzero entries.
    """
    cost = np.ascontiguousarray(cost, dtype=float)
    dmat = np.ascontiguousarray(dmat, dtype=float)
    n = cost.shape[0]
    m = dmat.shape[0] if dmat.size else 0
    if n < 1:
        raise SolverError("empty grid")

    ncols = n + 2 * m + 1  # psi | s | r | rhs
    rows = np.zeros((m + 1, ncols))
    rows[0, :n] = 1.0
    rows[0, -1] = 1.0
    for i in range(m):
        rows[1 + i, :n] = dmat[i]
        rows[1 + i, n + i] = 1.0
        rows[1 + i, n + m + i] = -1.0

    obj = np.zeros(ncols)
    obj[:n] = cost
    obj[n : n + m] = 1.0

    # starting basis: point mass at grid point 0, with s_i or r_i per row
    basis = np.zeros(m + 1, dtype=np.int64)
    for i in range(m):
        rows[1 + i] = rows[1 + i] - dmat[i, 0] * rows[0]
        if rows[1 + i, -1] >= 0.0:
            basis[1 + i] = n + i
        else:
            rows[1 + i] = -rows[1 + i]
            basis[1 + i] = n + m + i
    obj = obj - cost[0] * rows[0]
    for i in range(m):
        if basis[1 + i] == n + i:
            obj = obj - rows[1 + i]

    max_iters = 200 * (m + 2) + 2000
    bland_after = 20 * (m + 2) + 50
    iters = 0
    while True:
        # entering column: most negative reduced cost, first index on ties;
        # plain Bland scan once the pivot budget suggests cycling
        if iters < bland_after:
            enter = int(np.argmin(obj[: ncols - 1]))
            if obj[enter] >= -_TOL:
                break
        else:
            neg = np.nonzero(obj[: ncols - 1] < -_TOL)[0]
            if neg.size == 0:
                break
            enter = int(neg[0])

        # ratio test; ties go to the smallest basic-variable index (Bland)
        col = rows[:, enter]
        mask = col > _TOL
        if not mask.any():
            raise SolverError("unbounded prediction game LP (malformed input)")
        rhs = np.maximum(rows[:, -1], 0.0)
        ratios = np.full(m + 1, np.inf)
        np.divide(rhs, col, out=ratios, where=mask)
        best = ratios.min()
        cand = np.nonzero(ratios == best)[0]
        leave = int(cand[np.argmin(basis[cand])])

        piv = rows[leave, enter]
        rows[leave] = rows[leave] / piv
        rows[leave, enter] = 1.0
        factors = rows[:, enter].copy()
        factors[leave] = 0.0
        rows = rows - factors[:, None] * rows[leave]
        obj = obj - obj[enter] * rows[leave]
        rows[:, enter] = 0.0
        rows[leave, enter] = 1.0
        obj[enter] = 0.0
        basis[leave] = enter

        iters += 1
        if iters > max_iters:
            raise SolverError(f"simplex did not converge in {max_iters} pivots")

    psi = np.zeros(n)
    for k in range(m + 1):
        b = basis[k]
        if b < n:
            val = rows[k, -1]
            psi[b] = val if val > 0.0 else 0.0
    value = 0.0 - obj[-1]  # written this way so +0.0 never prints as -0
    return psi, float(value), iters

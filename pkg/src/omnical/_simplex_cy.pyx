# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled dense-simplex kernel, a bit-exact mirror of _simplex_py.

Every arithmetic statement, tie-break, and signed-zero path matches the
numpy implementation (updates run unconditionally even for zero factors;
the build compiles with -ffp-contract=off), so transcripts do not depend
on which backend was selected at import time.
"""

import numpy as np

cimport numpy as cnp

from omnical._simplex_py import SolverError

cnp.import_array()

cdef double _TOL = 1e-11


def solve_game_lp(cost_in, dmat_in):
    """Return (psi, value, iterations); see _simplex_py.solve_game_lp."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cost = np.ascontiguousarray(cost_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] dmat2
    cdef Py_ssize_t n = cost.shape[0]
    cdef Py_ssize_t m
    dmat_arr = np.ascontiguousarray(dmat_in, dtype=np.float64)
    if dmat_arr.size:
        dmat2 = dmat_arr
        m = dmat2.shape[0]
    else:
        dmat2 = np.zeros((0, n), dtype=np.float64)
        m = 0
    if n < 1:
        raise SolverError("empty grid")

    cdef Py_ssize_t ncols = n + 2 * m + 1
    cdef cnp.ndarray[cnp.float64_t, ndim=2] rows_arr = np.zeros((m + 1, ncols), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] obj_arr = np.zeros(ncols, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] basis_arr = np.zeros(m + 1, dtype=np.int64)
    cdef double[:, ::1] rows = rows_arr
    cdef double[::1] obj = obj_arr
    cdef cnp.int64_t[::1] basis = basis_arr
    cdef double[:, ::1] dmat = dmat2
    cdef double[::1] costv = cost

    cdef Py_ssize_t i, j, k, jj, enter, leave, iters, max_iters, bland_after
    cdef double best, colv, rhsk, ratio, best_ratio, piv, factor, val

    for j in range(n):
        rows[0, j] = 1.0
    rows[0, ncols - 1] = 1.0
    for i in range(m):
        for j in range(n):
            rows[1 + i, j] = dmat[i, j]
        rows[1 + i, n + i] = 1.0
        rows[1 + i, n + m + i] = -1.0

    for j in range(n):
        obj[j] = costv[j]
    for i in range(m):
        obj[n + i] = 1.0

    # starting basis: point mass at grid point 0, with s_i or r_i per row
    for i in range(m):
        factor = dmat[i, 0]
        for jj in range(ncols):
            rows[1 + i, jj] = rows[1 + i, jj] - factor * rows[0, jj]
        if rows[1 + i, ncols - 1] >= 0.0:
            basis[1 + i] = n + i
        else:
            for jj in range(ncols):
                rows[1 + i, jj] = -rows[1 + i, jj]
            basis[1 + i] = n + m + i
    factor = costv[0]
    for jj in range(ncols):
        obj[jj] = obj[jj] - factor * rows[0, jj]
    for i in range(m):
        if basis[1 + i] == n + i:
            for jj in range(ncols):
                obj[jj] = obj[jj] - rows[1 + i, jj]

    max_iters = 200 * (m + 2) + 2000
    bland_after = 20 * (m + 2) + 50
    iters = 0
    while True:
        # entering column (argmin keeps the first occurrence, like np.argmin)
        enter = -1
        if iters < bland_after:
            best = obj[0]
            enter = 0
            for j in range(1, ncols - 1):
                if obj[j] < best:
                    best = obj[j]
                    enter = j
            if obj[enter] >= -_TOL:
                break
        else:
            for j in range(ncols - 1):
                if obj[j] < -_TOL:
                    enter = j
                    break
            if enter < 0:
                break

        # ratio test; ties go to the smallest basic-variable index (Bland)
        leave = -1
        best_ratio = 0.0
        for k in range(m + 1):
            colv = rows[k, enter]
            if colv > _TOL:
                rhsk = rows[k, ncols - 1]
                if rhsk < 0.0:
                    rhsk = 0.0
                ratio = rhsk / colv
                if leave < 0 or ratio < best_ratio or (
                    ratio == best_ratio and basis[k] < basis[leave]
                ):
                    best_ratio = ratio
                    leave = k
        if leave < 0:
            raise SolverError("unbounded prediction game LP (malformed input)")

        piv = rows[leave, enter]
        for jj in range(ncols):
            rows[leave, jj] = rows[leave, jj] / piv
        rows[leave, enter] = 1.0
        for k in range(m + 1):
            factor = 0.0 if k == leave else rows[k, enter]
            for jj in range(ncols):
                rows[k, jj] = rows[k, jj] - factor * rows[leave, jj]
        factor = obj[enter]
        for jj in range(ncols):
            obj[jj] = obj[jj] - factor * rows[leave, jj]
        for k in range(m + 1):
            rows[k, enter] = 0.0
        rows[leave, enter] = 1.0
        obj[enter] = 0.0
        basis[leave] = enter

        iters += 1
        if iters > max_iters:
            raise SolverError("simplex did not converge in %d pivots" % max_iters)

    psi_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] psi = psi_arr
    for k in range(m + 1):
        if basis[k] < n:
            val = rows[k, ncols - 1]
            if val > 0.0:
                psi[basis[k]] = val
    cdef double value = 0.0 - obj[ncols - 1]
    return psi_arr, value, int(iters)

"""Dense two-phase primal simplex with implicit variable bounds.

Solves::

    minimize    c @ x
    subject to  A_ub @ x <= b_ub
                A_eq @ x == b_eq
                lb <= x <= ub

Variables at a finite upper bound are handled by bound flipping, so boxes
like ``0 <= x <= 1`` cost no tableau rows. Pricing is Dantzig's rule; after a
run of degenerate pivots the solver switches to Bland's rule (entering and
leaving) until the objective moves again, which rules out cycling.
"""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .. import kernels as _default_kernels
from ..kernels import AT_LOWER, AT_UPPER, BASIC

_DEGENERATE_RUN = 50


@dataclass
class LpResult:
    status: str  # optimal | infeasible | unbounded | iteration_limit
    x: np.ndarray | None
    fun: float
    pivots: int
    flips: int = 0


def _dense(A, n):
    if A is None:
        return np.zeros((0, n))
    if sp.issparse(A):
        return A.toarray()
    return np.asarray(A, dtype=float).reshape(-1, n)


def solve(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, lb=None, ub=None,
          tol=1e-9, max_iter=None, kernels=None):
    k = kernels or _default_kernels
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = _dense(A_ub, n)
    A_eq = _dense(A_eq, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    lb = np.zeros(n) if lb is None else np.asarray(lb, dtype=float)
    ub = np.full(n, np.inf) if ub is None else np.asarray(ub, dtype=float)
    if np.any(ub < lb - tol):
        return LpResult("infeasible", None, np.inf, 0)

    # shift to zero lower bounds and drop fixed columns
    width = ub - lb
    keep = np.flatnonzero(width > tol)
    b_ub = b_ub - A_ub @ lb
    b_eq = b_eq - A_eq @ lb
    A_ub = A_ub[:, keep]
    A_eq = A_eq[:, keep]
    u_struct = width[keep]
    nk = keep.size

    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq
    A = np.vstack([A_ub, A_eq]) if m else np.zeros((0, nk))
    b = np.concatenate([b_ub, b_eq])
    slack_sign = np.concatenate([np.ones(m_ub), np.zeros(m_eq)])
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0
    slack_sign[neg] *= -1.0
    needs_art = slack_sign <= 0
    art_rows = np.flatnonzero(needs_art)
    n_art = art_rows.size

    ncol = nk + m_ub + n_art
    T = np.zeros((m + 1, ncol))
    T[:m, :nk] = A
    T[np.arange(m_ub), nk + np.arange(m_ub)] = slack_sign[:m_ub]
    T[art_rows, nk + m_ub + np.arange(n_art)] = 1.0

    u = np.concatenate([u_struct, np.full(m_ub + n_art, np.inf)])
    basis = np.empty(m, dtype=np.intp)
    slack_basic = np.flatnonzero(~needs_art)
    basis[slack_basic] = nk + slack_basic
    basis[art_rows] = nk + m_ub + np.arange(n_art)
    status = np.full(ncol, AT_LOWER, dtype=np.int8)
    status[basis] = BASIC
    beta = b.copy()
    is_art = np.zeros(ncol, dtype=bool)
    is_art[nk + m_ub:] = True

    # phase 1: minimise the sum of artificials
    cost1 = is_art.astype(float)
    T[m] = cost1 - cost1[basis] @ T[:m]
    eligible = np.ones(ncol, dtype=np.uint8)
    stats = [0, 0]
    st = _iterate(k, T, beta, u, basis, status, eligible, m, tol, max_iter, stats)
    if st == "iteration_limit":
        return LpResult(st, None, np.inf, stats[0], stats[1])
    infeas = float(beta[is_art[basis]].sum()) if n_art else 0.0
    scale = max(1.0, float(np.abs(b).max()) if m else 1.0)
    if infeas > 1e-7 * scale:
        return LpResult("infeasible", None, np.inf, stats[0], stats[1])

    # phase 2: artificials pinned at zero and barred from entering
    u[is_art] = 0.0
    eligible[is_art] = 0
    full_c = np.concatenate([c[keep], np.zeros(m_ub + n_art)])
    T[m] = full_c - full_c[basis] @ T[:m]
    st = _iterate(k, T, beta, u, basis, status, eligible, m, tol, max_iter, stats)
    if st != "optimal":
        return LpResult(st, None, np.inf, stats[0], stats[1])

    vals = np.where(status == AT_UPPER, u, 0.0)
    vals[basis] = beta
    xk = np.clip(vals[:nk], 0.0, u_struct)
    x = lb.copy()
    x[keep] += xk
    return LpResult("optimal", x, float(c @ x), stats[0], stats[1])


def _iterate(k, T, beta, u, basis, status, eligible, m, tol, max_iter, stats):
    d = T[m]
    degenerate = 0
    it = 0
    while True:
        if max_iter is not None and it >= max_iter:
            return "iteration_limit"
        it += 1
        bland = degenerate >= _DEGENERATE_RUN
        col = k.price(d, status, eligible, tol, bland)
        if col < 0:
            return "optimal"
        delta = 1.0 if status[col] == AT_LOWER else -1.0
        alpha = T[:m, col]
        theta, row, to_upper = k.ratio_test(alpha, beta, u[basis], basis, delta, tol, bland)
        ucol = u[col]
        if row < 0 and not np.isfinite(ucol):
            return "unbounded"
        if ucol <= theta:
            # bound flip, no basis change
            beta -= (delta * ucol) * alpha
            status[col] = AT_UPPER if delta > 0 else AT_LOWER
            stats[1] += 1
            degenerate = 0 if ucol > tol else degenerate + 1
            continue
        beta -= (delta * theta) * alpha
        leaving = basis[row]
        status[leaving] = AT_UPPER if to_upper else AT_LOWER
        beta[row] = theta if delta > 0 else ucol - theta
        basis[row] = col
        status[col] = BASIC
        k.pivot(T, row, col)
        stats[0] += 1
        degenerate = degenerate + 1 if theta <= tol else 0

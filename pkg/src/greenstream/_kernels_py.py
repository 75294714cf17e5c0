"""Pure numpy implementations of the simplex kernels.

These mirror ``_kernels.pyx`` one for one and are used when the compiled
extension is unavailable (or ``GREENSTREAM_PURE_PYTHON=1`` is set).
"""
import numpy as np

BASIC = 0
AT_LOWER = 1
AT_UPPER = 2


def pivot(T, row, col):
    """Pivot tableau ``T`` in place on element ``(row, col)``.

    Only rows with a nonzero entry in the pivot column are touched, and only
    the nonzero columns of the pivot row are updated when that row is sparse.
    """
    prow = T[row] / T[row, col]
    prow[col] = 1.0
    T[row] = prow
    colv = T[:, col].copy()
    colv[row] = 0.0
    rows = np.flatnonzero(colv)
    if rows.size == 0:
        return
    cols = np.flatnonzero(prow)
    if cols.size * 3 < prow.size:
        T[np.ix_(rows, cols)] -= np.outer(colv[rows], prow[cols])
    else:
        T[rows] -= np.outer(colv[rows], prow)
    T[rows, col] = 0.0


def price(d, status, eligible, tol, bland):
    """Choose the entering column, or -1 when the basis is optimal.

    Dantzig's largest-violation rule by default; smallest eligible index
    when ``bland`` is set.
    """
    viol = np.where(status == AT_LOWER, -d, np.where(status == AT_UPPER, d, 0.0))
    viol = np.where(eligible, viol, 0.0)
    cand = np.flatnonzero(viol > tol)
    if cand.size == 0:
        return -1
    if bland:
        return int(cand[0])
    return int(cand[np.argmax(viol[cand])])


def ratio_test(alpha, beta, ub_basic, basis, delta, tol, bland):
    """Bounded-variable ratio test.

    Returns ``(theta, row, to_upper)``; ``row == -1`` means no basic variable
    blocks the step (``theta`` is ``inf``).
    """
    a = delta * alpha
    theta = np.full(a.shape, np.inf)
    dec = a > tol
    theta[dec] = beta[dec] / a[dec]
    inc = (a < -tol) & np.isfinite(ub_basic)
    theta[inc] = (ub_basic[inc] - beta[inc]) / (-a[inc])
    np.maximum(theta, 0.0, out=theta)
    tmin = theta.min() if theta.size else np.inf
    if not np.isfinite(tmin):
        return np.inf, -1, False
    ties = np.flatnonzero(theta <= tmin + 1e-12 * (1.0 + tmin))
    if bland:
        row = int(ties[np.argmin(basis[ties])])
    else:
        row = int(ties[np.argmax(np.abs(a[ties]))])
    return float(theta[row]), row, bool(a[row] < 0)

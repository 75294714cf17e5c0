import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from greenstream import kernels
from greenstream.pgs import simplex

BACKENDS = [kernels.get_backend(b) for b in kernels.available_backends()]
IDS = kernels.available_backends()


@pytest.mark.parametrize("k", BACKENDS, ids=IDS)
def test_textbook_lp(k):
    # max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18
    res = simplex.solve([-3, -5], [[1, 0], [0, 2], [3, 2]], [4, 12, 18], kernels=k)
    assert res.status == "optimal"
    assert res.fun == pytest.approx(-36.0)
    assert res.x == pytest.approx([2.0, 6.0])


@pytest.mark.parametrize("k", BACKENDS, ids=IDS)
def test_equality_bounds_and_negative_rhs(k):
    res = simplex.solve([1, 1, 1], [[-1, -1, 0]], [-2], A_eq=[[1, 0, 1]], b_eq=[1.5],
                        lb=[0, 0.25, 0], ub=[1, 1, np.inf], kernels=k)
    ref = linprog([1, 1, 1], A_ub=[[-1, -1, 0]], b_ub=[-2], A_eq=[[1, 0, 1]], b_eq=[1.5],
                  bounds=[(0, 1), (0.25, 1), (0, None)], method="highs")
    assert res.status == "optimal" and res.fun == pytest.approx(ref.fun)


@pytest.mark.parametrize("k", BACKENDS, ids=IDS)
def test_infeasible_and_unbounded(k):
    assert simplex.solve([1, 1], [[1, 1]], [-1], lb=[0, 0], kernels=k).status == "infeasible"
    assert simplex.solve([-1, 0], [[0, 1]], [1], lb=[0, 0], kernels=k).status == "unbounded"
    # bounded by the box alone
    res = simplex.solve([-1, -1], lb=[0, 0], ub=[2, 3], kernels=k)
    assert res.status == "optimal" and res.fun == -5 and res.pivots == 0 and res.flips == 2


@pytest.mark.parametrize("k", BACKENDS, ids=IDS)
def test_beale_cycling_example(k):
    # Beale's LP cycles under naive Dantzig pricing with lowest-index ties
    c = [-0.75, 150, -0.02, 6]
    A = [[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]]
    res = simplex.solve(c, A, [0, 0, 1], kernels=k)
    assert res.status == "optimal"
    assert res.fun == pytest.approx(-0.05)


@pytest.mark.parametrize("k", BACKENDS, ids=IDS)
def test_fixed_variables_dropped(k):
    res = simplex.solve([1, 2], [[-1, -1]], [-3], lb=[1, 2], ub=[1, 5], kernels=k)
    assert res.status == "optimal" and res.x == pytest.approx([1.0, 2.0]) and res.fun == 5


@st.composite
def _lp(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    m, p, n = int(rng.integers(1, 8)), int(rng.integers(0, 3)), int(rng.integers(1, 10))
    A = rng.normal(size=(m, n)).round(2)
    Aeq = rng.normal(size=(p, n)).round(2)
    x0 = rng.random(n)
    slack = rng.random(m) * (rng.random(m) < 0.7)  # some rows tight at x0: degeneracy
    b = A @ x0 + slack
    beq = Aeq @ x0
    if rng.random() < 0.2:
        b = b - 5.0  # often infeasible
    ub = np.where(rng.random(n) < 0.6, 1.0 + rng.random(n), np.inf)
    lb = np.where(rng.random(n) < 0.2, -rng.random(n), 0.0)
    c = rng.normal(size=n).round(2)
    return c, A, b, Aeq, beq, lb, ub


@given(_lp())
@settings(max_examples=200, deadline=None)
def test_matches_highs(lp):
    c, A, b, Aeq, beq, lb, ub = lp
    ref = linprog(c, A_ub=A, b_ub=b, A_eq=Aeq if len(beq) else None, b_eq=beq if len(beq) else None,
                  bounds=list(zip(lb, [None if not np.isfinite(u) else u for u in ub])),
                  method="highs")
    for k in BACKENDS:
        res = simplex.solve(c, A, b, Aeq, beq, lb, ub, kernels=k)
        expected = {0: "optimal", 2: "infeasible", 3: "unbounded"}[ref.status]
        assert res.status == expected
        if expected == "optimal":
            assert res.fun == pytest.approx(ref.fun, rel=1e-7, abs=1e-7)
            assert np.all(A @ res.x <= b + 1e-7)
            assert np.all(res.x >= lb - 1e-9) and np.all(res.x <= ub + 1e-9)

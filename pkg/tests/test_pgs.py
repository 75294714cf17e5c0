import re

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from greenstream.playback import verify_plan
from greenstream.pgs import (build_model, enumerate_oracle, export_mps, heuristic_round,
                             solve_exact, solve_fixed_levels, solve_lp_relaxation)
from greenstream.pgs.model import PgsInstance
from greenstream.pgs.mps import model_to_mps
from greenstream.radio import RateMatrix
from greenstream.scenario import AssociationMap
from greenstream.streaming import QualityLadder, SegmentSchedule

from helpers import MBIT, random_tiny, single_user

TWO = (0.25 * MBIT, 0.5 * MBIT)


def _feasible_stall_free(inst, sol):
    rep = verify_plan(sol.x, inst.rates, sol.plan, inst.ladder, inst.schedule)
    return rep.stall_free


# -- model -----------------------------------------------------------------------

def test_model_counts_single_user():
    inst = single_user(np.full(20, MBIT), TWO, 2.0)
    m = build_model(inst)
    assert m.n_x == 20 and m.n_cols - m.n_x == 4
    assert (m.count("C1"), m.count("SEL"), m.count("C2"), m.count("C3"), m.count("PB")) == (2, 2, 1, 20, 0)
    assert m.col_names[0] == "x_1_1" and m.col_names[-1] == "q_1_2_2"
    assert m.row_names[0] == "C1_1_1"


def test_two_users_on_different_bs_get_separate_capacity_rows():
    T = 10
    present = np.ones((2, T), dtype=bool)
    rates = RateMatrix(np.full((2, T), MBIT), present, 1.0, (1, 2))
    serving = np.zeros((2, T), dtype=int)
    serving[1, 4] = 1
    inst = PgsInstance(rates, AssociationMap(serving, 2), QualityLadder(TWO),
                       SegmentSchedule.from_presence(present, 1.0, 10.0), 1.0)
    m = build_model(inst)
    c3 = [n for n in m.row_names if n.startswith("C3_") and n.endswith("_5")]
    assert c3 == ["C3_1_5", "C3_2_5"]
    assert m.count("C3") == 11


def test_instance_validation():
    with pytest.raises(ValueError):
        single_user(np.full(20, MBIT), TWO, 2.5)
    with pytest.raises(ValueError):
        single_user(np.full(20, MBIT), TWO, 1.0, b_max=-1.0)


# -- spec examples -----------------------------------------------------------------

def test_hand_examples():
    flat = single_user(np.full(20, MBIT), TWO, 2.0)
    peak = single_user(np.r_[np.full(10, 2 * MBIT), np.full(10, MBIT)], TWO, 2.0)
    mixed = single_user(np.full(20, MBIT), TWO, 1.5)
    for inst, want in ((flat, 10.0), (peak, 5.0), (mixed, 7.5)):
        sol = solve_exact(build_model(inst))
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(want, abs=1e-9)
        assert enumerate_oracle(inst).objective == pytest.approx(want, abs=1e-9)
        assert solve_lp_relaxation(build_model(inst)).bound <= want + 1e-9
        assert _feasible_stall_free(inst, sol)
    # front-loading: the whole video moves at the 2 Mbit/s peak
    sol = solve_exact(build_model(peak))
    assert np.all(sol.x[0, 10:] == 0)
    assert sorted(solve_exact(build_model(mixed)).plan.levels[0].tolist()) == [1, 2]


def test_infeasible_toy_names_a_constraint():
    inst = single_user(np.full(20, 0.6 * MBIT), TWO, 2.0)  # level 2 needs 10 Mbit, 12 deliverable
    assert solve_exact(build_model(inst)).feasible
    inst = single_user(np.full(20, 0.4 * MBIT), TWO, 2.0)
    sol = solve_exact(build_model(inst))
    assert sol.status == "infeasible" and not sol.feasible
    assert "C1" in sol.note and "user 1" in sol.note
    assert enumerate_oracle(inst).status == "infeasible"


def test_heuristic_examples():
    inst = single_user(np.full(20, MBIT), TWO, 1.5)
    model = build_model(inst)
    relax = solve_lp_relaxation(model, tighten=True)
    sol = heuristic_round(model, relax.values)
    assert sol.plan.levels[0].sum() >= 3
    # integral relaxation -> rounding is a fixed point
    flat = build_model(single_user(np.full(20, MBIT), TWO, 2.0))
    relax = solve_lp_relaxation(flat, tighten=True)
    assert heuristic_round(flat, relax.values).objective == pytest.approx(solve_exact(flat).objective)


def test_fixed_levels_lp():
    model = build_model(single_user(np.full(20, MBIT), TWO, 1.0))
    assert solve_fixed_levels(model, [[2, 2]]).bound == pytest.approx(10.0)
    assert solve_fixed_levels(model, [[1, 1]]).bound == pytest.approx(5.0)


def test_prebuffer_cap_is_respected():
    r = np.r_[np.full(10, 4 * MBIT), np.full(20, MBIT)]
    free = single_user(r, TWO, 2.0)
    capped = single_user(r, TWO, 2.0, b_max=6 * MBIT)
    a = solve_exact(build_model(free))
    b = solve_exact(build_model(capped))
    assert a.objective < b.objective
    rep = verify_plan(b.x, capped.rates, b.plan, capped.ladder, capped.schedule)
    assert rep.max_prebuffer_bits.max() <= 6 * MBIT + 1e-3
    assert rep.stall_free
    assert b.objective == pytest.approx(enumerate_oracle(capped).objective, abs=1e-6)


# -- oracle equivalence and sandwich ----------------------------------------------

@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_exact_matches_oracle(seed):
    inst = random_tiny(np.random.default_rng(seed))
    sol = solve_exact(build_model(inst))
    ref = enumerate_oracle(inst)
    assert sol.feasible == ref.feasible
    if ref.feasible:
        assert sol.objective == pytest.approx(ref.objective, abs=1e-6)
        assert _feasible_stall_free(inst, sol)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(12))
def test_exact_matches_oracle_nonaffine_three_levels(seed):
    """Non-affine three-level ladders, where the root relaxation is often fractional."""
    rng = np.random.default_rng(1000 + seed)
    inst = random_tiny(rng, max_q=3, max_segments=2, affine=False, b_max_prob=0.0)
    while inst.ladder.q_max < 3:
        inst = random_tiny(rng, max_q=3, max_segments=2, affine=False, b_max_prob=0.0)
    sol = solve_exact(build_model(inst))
    ref = enumerate_oracle(inst)
    assert sol.feasible == ref.feasible
    if ref.feasible:
        assert sol.objective == pytest.approx(ref.objective, abs=1e-6)


def test_branching_happens_on_some_nonaffine_instance():
    nodes = []
    rng = np.random.default_rng(7)
    for _ in range(40):
        inst = random_tiny(rng, max_q=3, affine=False, b_max_prob=0.0)
        sol = solve_exact(build_model(inst))
        if sol.feasible:
            nodes.append(sol.stats["nodes"])
    assert max(nodes) > 1


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_sandwich(seed):
    inst = random_tiny(np.random.default_rng(seed), max_q=3)
    model = build_model(inst)
    relax = solve_lp_relaxation(model)
    exact = solve_exact(model)
    if not exact.feasible:
        return
    heur = heuristic_round(model, solve_lp_relaxation(model, tighten=True).values)
    assert relax.bound <= exact.objective + 1e-6
    if heur.feasible:
        assert exact.objective <= heur.objective + 1e-6


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_objective_monotone_in_l_req(seed):
    base = random_tiny(np.random.default_rng(seed), max_q=2, b_max_prob=0.0)
    prev = -np.inf
    for l_req in (1.0, 1.25, 1.5, 1.75, 2.0)[:4 * base.ladder.q_max - 3]:
        inst = PgsInstance(base.rates, base.assoc, base.ladder, base.schedule, l_req)
        sol = solve_exact(build_model(inst))
        val = sol.objective if sol.feasible else np.inf
        assert val >= prev - 1e-7
        prev = val


def test_time_limit_reports_incumbent():
    rng = np.random.default_rng(3)
    inst = random_tiny(rng, max_q=3, affine=False, b_max_prob=0.0)
    sol = solve_exact(build_model(inst), max_nodes=1)
    assert sol.status in ("optimal", "time_limit")
    if sol.status == "time_limit" and sol.feasible:
        assert sol.lp_bound <= sol.objective + 1e-9


# -- MPS -----------------------------------------------------------------------------

def test_mps_skeleton(tmp_path):
    model = build_model(single_user(np.full(20, MBIT), TWO, 2.0))
    text = model_to_mps(model)
    heads = [ln for ln in text.splitlines() if ln and not ln.startswith(" ")]
    assert [h.split()[0] for h in heads] == ["NAME", "OBJSENSE", "ROWS", "COLUMNS", "RHS",
                                            "BOUNDS", "ENDATA"]
    assert text.count("'INTORG'") == text.count("'INTEND'") == 1
    assert re.search(r"^ BV BND +q_1_1_1$", text, re.M)
    path = export_mps(model, tmp_path / "m.mps")
    assert path.read_text() == text


def test_mps_round_trip_highs(tmp_path):
    highspy = pytest.importorskip("highspy")
    rng = np.random.default_rng(11)
    for _ in range(10):
        inst = random_tiny(rng)
        model = build_model(inst)
        export_mps(model, tmp_path / "m.mps")
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.readModel(str(tmp_path / "m.mps"))
        h.run()
        status = h.modelStatusToString(h.getModelStatus())
        ours = solve_exact(model)
        if ours.feasible:
            assert status == "Optimal"
            assert h.getInfo().objective_function_value == pytest.approx(ours.objective, abs=1e-5)
        else:
            assert status == "Infeasible"

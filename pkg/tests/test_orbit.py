import json

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from relaxor import (
    Anchor, Branch, BranchChoice, DegenerateOrbitError, InadmissibleOrbitError,
    InconsistentEndpointsError, InconsistentJumpPairError, JumpPair, ManifoldTag,
    NoSolutionError, OffOrbitError, Params, SingularOrbit, assemble_singular_orbit,
    eliminate_p1B, eliminate_p2B, existence_residual, extrema_M0, extrema_M1,
    lv_branch_M0, lv_branch_M1, scan_family, solve_balanced_orbit,
    solve_jump_points, trait_pressure_balance, travel_time_M0, travel_time_M1,
)
from relaxor.model import h0, h1
from conftest import BALANCED_GUESS, REFERENCE_ORBITS


# ------------------------------------------------------------ level inversions

def test_lv_branch_m1_returns_anchor_on_its_own_branch():
    p = Params(0.5, 0.4)
    a = Anchor(2.41, 1.18)  # anchor on the upper half (z > 1)
    assert lv_branch_M1(a.p, a, Branch.LOWER, p) == pytest.approx(a.z, abs=1e-12)


def test_lv_branch_m1_lower_value_matches_bisection():
    p = Params(0.5, 1.0)
    a = Anchor(2.41, 1.18)
    level = h1(a.p, a.z, p)
    z_ref = brentq(lambda z: h1(1.0, z, p) - level, 1e-8, 1.0, xtol=1e-14)
    assert lv_branch_M1(1.0, a, Branch.PRINCIPAL, p) == pytest.approx(z_ref, abs=1e-10)


def test_lv_branch_m1_extrema_meet_at_center_level():
    p = Params(0.5, 0.4)
    a = Anchor(2.41, 1.18)
    pmin, pmax = extrema_M1(a, p)
    for prey in (pmin, pmax):
        for branch in (Branch.PRINCIPAL, Branch.LOWER):
            assert lv_branch_M1(prey, a, branch, p) == pytest.approx(1.0, abs=1e-7)


def test_lv_branch_m0_against_bisection():
    p = Params(0.8, 1.0)
    a = Anchor(2.27, 1.39)
    assert lv_branch_M0(a.p, a, Branch.LOWER, p) == pytest.approx(a.z, abs=1e-12)
    level = h0(a.p, a.z, p)
    z_ref = brentq(lambda z: h0(1.0, z, p) - level, 1e-8, p.r, xtol=1e-15)
    assert lv_branch_M0(1.0, a, Branch.PRINCIPAL, p) == pytest.approx(z_ref, abs=1e-10)
    p2min, p2max = extrema_M0(a, p)
    assert lv_branch_M0(p2min, a, Branch.LOWER, p) == pytest.approx(p.r, abs=1e-7)


def test_lv_branch_off_orbit_error():
    p = Params(0.5, 0.4)
    a = Anchor(2.41, 1.18)
    _, pmax = extrema_M1(a, p)
    with pytest.raises(OffOrbitError):
        lv_branch_M1(pmax * 1.2, a, Branch.LOWER, p)


def test_branch_inversion_level_property(rng):
    p = Params(0.5, 0.4)
    count = 0
    while count < 1000:
        a = Anchor(float(rng.uniform(0.2, 3.0)), float(rng.uniform(0.3, 2.5)))
        if abs(a.p - 1.0) < 0.05 and abs(a.z - 1.0) < 0.05:
            continue
        pmin, pmax = extrema_M1(a, p)
        prey = float(rng.uniform(pmin, pmax))
        branch = Branch.PRINCIPAL if rng.random() < 0.5 else Branch.LOWER
        z = lv_branch_M1(prey, a, branch, p)
        assert abs(h1(prey, z, p) - h1(a.p, a.z, p)) < 1e-10
        count += 1


# ------------------------------------------------------------------- extrema

def test_extrema_m1_degenerate_anchor():
    with pytest.raises(DegenerateOrbitError):
        extrema_M1(Anchor(1.0, 1.0), Params(0.5, 0.4))


def test_extrema_m1_level_residual():
    p = Params(0.5, 1.0)
    a = Anchor(2.41, 1.18)
    pmin, pmax = extrema_M1(a, p)
    assert pmin < 1.0 < pmax
    level = h1(a.p, a.z, p)
    assert h1(pmin, 1.0, p) == pytest.approx(level, abs=1e-10)
    assert h1(pmax, 1.0, p) == pytest.approx(level, abs=1e-10)


def test_extrema_m1_anchor_at_extremum_is_fixed_point():
    p = Params(0.5, 0.4)
    pmin, pmax = extrema_M1(Anchor(2.41, 1.18), p)
    again_min, again_max = extrema_M1(Anchor(pmin, 1.0), p)
    assert again_min == pytest.approx(pmin, rel=1e-9)
    assert again_max == pytest.approx(pmax, rel=1e-9)


def test_extrema_m0_level_residual_and_fixed_point():
    p = Params(0.8, 1.0)
    a = Anchor(2.27, 1.39)
    p2min, p2max = extrema_M0(a, p)
    level = h0(a.p, a.z, p)
    assert h0(p2min, p.r, p) == pytest.approx(level, abs=1e-10)
    assert h0(p2max, p.r, p) == pytest.approx(level, abs=1e-10)
    again = extrema_M0(Anchor(p2max, p.r), p)
    assert again[1] == pytest.approx(p2max, rel=1e-9)
    with pytest.raises(DegenerateOrbitError):
        extrema_M0(Anchor(1.0, p.r), p)


# -------------------------------------------------------------- eliminations

def test_eliminate_p2b_identity_case():
    p = Params(0.5, 0.4)
    for p2a in (0.3, 0.8, 1.0):
        out = eliminate_p2B(p2a, 1.3, 1.3, p, Branch.PRINCIPAL)
        assert out == pytest.approx(p2a, abs=1e-12)


def test_eliminate_p2b_conjugate_root_matches_bisection():
    p = Params(0.5, 0.4)
    p2a = 0.45
    out = eliminate_p2B(p2a, 1.3, 1.3, p, Branch.LOWER)
    # conjugate solves x*exp(-x) = p2a*exp(-p2a) on the far side of 1
    target = p2a * np.exp(-p2a)
    ref = brentq(lambda x: x * np.exp(-x) - target, 1.0, 50.0, xtol=1e-13)
    assert out == pytest.approx(ref, abs=1e-10)


def test_eliminate_against_reference_values():
    # quoted values carry two-decimal rounding; the conserved-level
    # inversion amplifies the p2A rounding by |dH/dp2A| / |dH/dp2B| ~ 7,
    # so the match is asserted at the propagated tolerance
    p = Params(0.5, 0.4)
    p2b = eliminate_p2B(0.19, 0.70, 0.85, p, Branch.LOWER)
    assert p2b == pytest.approx(2.69, abs=0.035)
    p1b = eliminate_p1B(4.27, 0.70, 0.85, p, Branch.PRINCIPAL)
    assert p1b == pytest.approx(0.06, abs=0.02)


def test_eliminate_preserves_conserved_quantity():
    p = Params(0.5, 0.4)
    p2b = eliminate_p2B(0.19, 0.70, 0.85, p, Branch.LOWER)
    assert h0(p2b, 0.85, p) == pytest.approx(h0(0.19, 0.70, p), abs=1e-10)
    p1b = eliminate_p1B(4.27, 0.70, 0.85, p, Branch.PRINCIPAL)
    assert h1(p1b, 0.85, p) == pytest.approx(h1(4.27, 0.70, p), abs=1e-10)


def test_eliminate_p1b_identity_and_conjugate():
    p = Params(0.5, 0.4)
    assert eliminate_p1B(0.7, 1.2, 1.2, p, Branch.PRINCIPAL) == pytest.approx(0.7, abs=1e-12)
    conj = eliminate_p1B(0.7, 1.2, 1.2, p, Branch.LOWER)
    target = 0.7 * np.exp(-0.7)
    ref = brentq(lambda x: x * np.exp(-x) - target, 1.0, 50.0, xtol=1e-13)
    assert conj == pytest.approx(ref, abs=1e-10)


def test_eliminate_no_solution_beyond_reach():
    p = Params(0.5, 0.4)
    with pytest.raises(NoSolutionError):
        eliminate_p2B(0.19, 0.70, 50.0, p, Branch.LOWER)


# -------------------------------------------------------------- travel times

def _ode_first_arrival(man, p, start, end, t_max=60.0):
    """Event-stopped integration of the planar slow flow (oracle)."""
    if man is ManifoldTag.M1:
        rhs = lambda t, y: [(1 - y[1]) * y[0], (y[0] - 1) * p.m * y[1]]
        flow_at = lambda y: np.array([(1 - y[1]) * y[0], (y[0] - 1) * p.m * y[1]])
    else:
        rhs = lambda t, y: [(p.r - y[1]) * y[0], (y[0] - 1) * p.m * y[1]]
        flow_at = lambda y: np.array([(p.r - y[1]) * y[0], (y[0] - 1) * p.m * y[1]])
    target = np.asarray(end, dtype=float)
    flow = flow_at(target)

    def crossing(t, y):
        # section orthogonal to the flow at the target (transversal there)
        return (y[0] - target[0]) * flow[0] + (y[1] - target[1]) * flow[1]

    crossing.direction = 0.0
    sol = solve_ivp(rhs, (0.0, t_max), np.asarray(start, dtype=float),
                    events=crossing, rtol=1e-12, atol=1e-12, dense_output=True)
    scale = np.linalg.norm(target)
    for t_event, y_event in zip(sol.t_events[0], sol.y_events[0]):
        if t_event > 1e-9 and np.linalg.norm(y_event - target) < 1e-3 * scale:
            return float(t_event)
    raise AssertionError("oracle integration never reached the end point")


def test_travel_time_zero_and_level_mismatch():
    p = Params(0.5, 0.4)
    assert travel_time_M1((2.41, 1.18), (2.41, 1.18), p) == 0.0
    assert travel_time_M0((2.27, 1.39), (2.27, 1.39), p) == 0.0
    with pytest.raises(InconsistentEndpointsError):
        travel_time_M1((2.41, 1.18), (2.41, 1.30), p)
    with pytest.raises(InconsistentEndpointsError):
        travel_time_M0((2.27, 1.39), (2.27, 1.20), p)


def test_travel_time_matches_ode_oracle_on_hybrid_segment(reference_pairs):
    p, pair = reference_pairs["hybrid"]
    t_quad = travel_time_M1((pair.p1a, pair.za), (pair.p1b, pair.zb), p)
    t_ode = _ode_first_arrival(ManifoldTag.M1, p, (pair.p1a, pair.za),
                               (pair.p1b, pair.zb))
    assert t_quad == pytest.approx(t_ode, rel=1e-4)


def test_travel_time_wrap_path_matches_ode_oracle(reference_pairs):
    # the predator-prey-2 geometry wraps around both extremal points
    p, pair = reference_pairs["predp2"]
    t_quad = travel_time_M1((pair.p1a, pair.za), (pair.p1b, pair.zb), p)
    t_ode = _ode_first_arrival(ManifoldTag.M1, p, (pair.p1a, pair.za),
                               (pair.p1b, pair.zb))
    assert t_quad == pytest.approx(t_ode, rel=1e-4)


@pytest.mark.parametrize("name", list(REFERENCE_ORBITS))
def test_travel_time_cross_formula_consistency(reference_pairs, name):
    p, pair = reference_pairs[name]
    t1 = travel_time_M1((pair.p1a, pair.za), (pair.p1b, pair.zb), p)
    assert pair.p2a * np.exp(p.r * t1) == pytest.approx(pair.p2b, abs=1e-8)
    t0 = travel_time_M0((pair.p2b, pair.zb), (pair.p2a, pair.za), p)
    assert pair.p1b * np.exp(t0) == pytest.approx(pair.p1a, abs=1e-8)


# ------------------------------------------------------- existence conditions

def test_existence_residual_small_at_consistent_reference_values():
    # three of the four reference tuples are internally consistent with
    # the conserved quantities; their residuals sit inside the rounding budget
    for name in ("predp2", "clockwise", "hybrid"):
        (r, m), a, b = REFERENCE_ORBITS[name]
        res = existence_residual(a[0], a[1], a[2], b[2], BranchChoice(), Params(r, m))
        assert max(abs(res[0]), abs(res[1])) < 5e-2, name


def test_existence_residual_vanishes_on_converged_pair(reference_pairs):
    for name, (p, pair) in reference_pairs.items():
        res = existence_residual(pair.p1a, pair.p2a, pair.za, pair.zb,
                                 BranchChoice(), p)
        assert max(abs(res[0]), abs(res[1])) < 1e-10, name


# ---------------------------------------------------------------- the solver

def test_solver_at_converged_point_returns_immediately(reference_pairs):
    p, pair = reference_pairs["hybrid"]
    again = solve_jump_points({"p1A": pair.p1a, "zA": pair.za},
                              {"p2A": pair.p2a, "zB": pair.zb}, p, max_iter=2)
    assert again.p2b == pytest.approx(pair.p2b, rel=1e-10)


@pytest.mark.parametrize("name,tol", [("predp2", 0.02), ("clockwise", 0.02),
                                      ("hybrid", 0.02)])
def test_solver_reproduces_consistent_references(reference_pairs, name, tol):
    (r, m), a, b = REFERENCE_ORBITS[name]
    _, pair = reference_pairs[name]
    got = pair.as_dict()
    quoted = dict(zip(("p1A", "p2A", "zA", "p1B", "p2B", "zB"), a + b))
    for key, value in quoted.items():
        assert got[key] == pytest.approx(value, abs=tol), (name, key)


def test_solver_rejects_collapsed_orbits():
    # pinning the prey-2 coordinate above prey 1 funnels the iteration into
    # the zero-travel-time fixed point of the conditions, which is not an orbit
    p = Params(0.5, 0.4)
    with pytest.raises(InadmissibleOrbitError):
        solve_jump_points({"p2A": 1.2, "zA": 1.5}, {"p1A": 2.5, "zB": 1.4}, p)


def test_solver_validates_pinning():
    p = Params(0.5, 0.4)
    with pytest.raises(Exception):
        solve_jump_points({"p1A": 1.8}, {"p2A": 0.5, "zB": 1.4, "zA": 1.3}, p)


def test_jump_pair_check_and_serialization(reference_pairs):
    p, pair = reference_pairs["hybrid"]
    pair.check(p)
    assert pair.period == pytest.approx(pair.t0 + pair.t1)
    round_trip = JumpPair.from_dict(json.loads(json.dumps(pair.as_dict())))
    assert round_trip == pair
    bad = JumpPair(pair.p1a, pair.p2a, pair.za, pair.p1b, pair.p2b,
                   pair.zb * 1.05, pair.t0, pair.t1)
    with pytest.raises(InconsistentEndpointsError):
        bad.check(p)


# --------------------------------------------------------------- family scan

def test_scan_single_point_grid(reference_pairs):
    p, pair = reference_pairs["hybrid"]
    table = scan_family(p, (np.array([pair.p1a]), np.array([pair.za])),
                        {"p2A": pair.p2a, "zB": pair.zb})
    assert len(table) == 1
    assert table.rows[0].jump.p2b == pytest.approx(pair.p2b, rel=1e-9)
    assert table.rows[0].residual < 1e-10


def test_scan_rows_pass_residual_recheck(params_default):
    table = scan_family(params_default,
                        (np.linspace(1.8, 2.2, 3), np.linspace(1.35, 1.55, 3)),
                        {"p2A": 0.49, "zB": 1.40})
    assert len(table) == 9
    for row in table.rows:
        d = row.jump.as_dict()
        res = existence_residual(d["p1A"], d["p2A"], d["zA"], d["zB"],
                                 BranchChoice(), params_default)
        assert max(abs(res[0]), abs(res[1])) < 1e-10
        assert d["p1A"] > d["p2A"] and d["p1B"] < d["p2B"]


def test_family_table_serialization(tmp_path, params_default):
    table = scan_family(params_default, (np.array([1.81]), np.array([1.35])),
                        {"p2A": 0.49, "zB": 1.40})
    json_path = tmp_path / "family.json"
    csv_path = tmp_path / "family.csv"
    table.to_json(json_path)
    table.to_csv(csv_path)
    rows = json.loads(json_path.read_text())
    assert len(rows) == 1
    header = csv_path.read_text().splitlines()[0].split(",")
    assert header == ["r", "m", "pin_p1A", "pin_zA", "p1A", "p2A", "zA",
                      "p1B", "p2B", "zB", "T0", "T1", "residual"]
    assert list(rows[0])[:2] == ["r", "m"]


# ------------------------------------------------------------------- assembly

def test_assemble_singular_orbit_properties(reference_orbits):
    p, pair, orbit = reference_orbits["hybrid"]
    assert orbit.period == pytest.approx(pair.t0 + pair.t1)
    assert np.all(np.diff(orbit.times) > 0.0)
    states = orbit.states
    n1 = len(orbit.t_m1)
    assert np.all(states[:n1, 3] == 1.0)
    assert np.all(states[n1:, 3] == 0.0)
    # segment endpoints match the jump coordinates
    assert np.allclose(orbit.y_m1[0], pair.a_point(), atol=1e-12)
    assert np.allclose(orbit.y_m1[-1], pair.b_point(), atol=1e-6)
    assert np.allclose(orbit.y_m0[-1], pair.a_point(), atol=1e-6)
    # conserved-quantity drift along the sampled segments
    drift1 = np.ptp(h1(orbit.y_m1[:, 0], orbit.y_m1[:, 2], p))
    drift0 = np.ptp(h0(orbit.y_m0[:, 1], orbit.y_m0[:, 2], p))
    assert max(drift0, drift1) < 1e-8


def test_assemble_rejects_inconsistent_pair(params_default, reference_pairs):
    _, pair = reference_pairs["hybrid"]
    broken = JumpPair(pair.p1a, pair.p2a, pair.za, pair.p1b, pair.p2b,
                      pair.zb, pair.t0 * 1.2, pair.t1)
    with pytest.raises(InconsistentJumpPairError):
        assemble_singular_orbit(broken, params_default)


def test_singular_orbit_json_round_trip(tmp_path, reference_orbits):
    _, _, orbit = reference_orbits["hybrid"]
    path = tmp_path / "orbit.json"
    orbit.to_json(path)
    back = SingularOrbit.from_json(path)
    assert np.array_equal(back.times, orbit.times)
    assert np.array_equal(back.states, orbit.states)
    assert back.jumps == orbit.jumps


# ----------------------------------------------------- trait-pressure balance

def test_balanced_orbit_solution(params_default):
    pair = solve_balanced_orbit(BALANCED_GUESS, params_default)
    g1, g0 = trait_pressure_balance(pair, params_default)
    assert abs(g1) < 1e-12 and abs(g0) < 1e-12
    res = existence_residual(pair.p1a, pair.p2a, pair.za, pair.zb,
                             BranchChoice(), params_default)
    assert max(abs(res[0]), abs(res[1])) < 1e-10
    assert pair.za == pair.zb  # pinned symmetric level
    assert pair.p1a == pytest.approx(1.21759144, abs=1e-6)
    # mirror-conjugate endpoints: log(p) - p agrees across each segment
    assert np.log(pair.p1a) - pair.p1a == pytest.approx(
        np.log(pair.p1b) - pair.p1b, abs=1e-10)
    assert np.log(pair.p2a) - pair.p2a == pytest.approx(
        np.log(pair.p2b) - pair.p2b, abs=1e-10)


def test_balanced_orbit_is_reproducible_across_guesses(params_default):
    a = solve_balanced_orbit(BALANCED_GUESS, params_default)
    other = dict(BALANCED_GUESS, p1A=1.4, p2A=0.7)
    b = solve_balanced_orbit(other, params_default)
    assert b.p1a == pytest.approx(a.p1a, abs=1e-9)
    assert b.p2a == pytest.approx(a.p2a, abs=1e-9)


def test_trait_pressure_matches_numerical_quadrature(reference_orbits):
    # closed forms of the net (p1 - p2) areas against trapezoid sums over
    # the densely sampled slow segments
    p, pair, orbit = reference_orbits["hybrid"]
    g1, g0 = trait_pressure_balance(pair, p)
    area1 = np.trapezoid(orbit.y_m1[:, 0] - orbit.y_m1[:, 1], orbit.t_m1)
    # the assembled orbit drops the duplicated seam sample; restore it so
    # the quadrature covers the full q=0 segment
    t0 = np.concatenate([[pair.t1], orbit.t_m0])
    y0 = np.vstack([pair.b_point(), orbit.y_m0])
    area0 = np.trapezoid(y0[:, 0] - y0[:, 1], t0)
    assert g1 == pytest.approx(area1, abs=5e-5)
    assert g0 == pytest.approx(area0, abs=5e-5)


# -------------------------------------------- direct check of all four conditions

@pytest.mark.parametrize("name", list(REFERENCE_ORBITS))
def test_converged_pairs_satisfy_original_conditions(reference_pairs, name):
    p, pair = reference_pairs[name]
    assert h0(pair.p2a, pair.za, p) == pytest.approx(h0(pair.p2b, pair.zb, p), abs=1e-9)
    assert h1(pair.p1a, pair.za, p) == pytest.approx(h1(pair.p1b, pair.zb, p), abs=1e-9)
    t1 = travel_time_M1((pair.p1a, pair.za), (pair.p1b, pair.zb), p)
    assert t1 == pytest.approx(np.log(pair.p2b / pair.p2a) / p.r, abs=1e-9)
    t0 = travel_time_M0((pair.p2b, pair.zb), (pair.p2a, pair.za), p)
    assert t0 == pytest.approx(np.log(pair.p1a / pair.p1b), abs=1e-9)

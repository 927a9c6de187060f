from __future__ import annotations

import numpy as np
import pytest

from consensusflow import (
    Ball,
    Box,
    ControlLaw,
    MetricSeries,
    ObjectiveSet,
    Quadratic,
    Scenario,
    SquaredDistance,
    Trajectory,
    WeightedDigraph,
    audit_assumptions,
    check_disagreement_bound,
    consensus_diameter,
    detect_convergence,
    diameter_series,
    dini_nonincreasing,
    gradient_norm_series,
    integrate,
    lyapunov_trace,
    node_optimum_residuals,
    optimality_gap,
    sphere_intersection,
    stationary_quadratic,
)

from conftest import ball_objectives, two_node_graph, two_node_quadratics


def _flat_trajectory(states):
    states = np.asarray(states, dtype=float)
    return Trajectory(np.array([0.0, 1.0]), np.stack([states, states]))


# --- metric series -----------------------------------------------------------

def test_metric_series_validation_and_reduction():
    with pytest.raises(ValueError):
        MetricSeries(np.array([0.0, 1.0]), np.zeros(3))
    s = MetricSeries(np.array([0.0, 1.0]), np.array([[1.0, 3.0], [2.0, 0.0]]))
    reduced = s.max_across()
    assert np.array_equal(reduced.values, [3.0, 2.0])
    assert np.array_equal(reduced.terminal, 2.0)


def test_lyapunov_trace_anchor():
    traj = _flat_trajectory([[1.0], [2.0]])
    v = lyapunov_trace(traj, [1.5])
    assert np.array_equal(v.values, [[0.25, 0.25], [0.25, 0.25]])
    with pytest.raises(ValueError):
        lyapunov_trace(traj, [1.5, 0.0])


def test_dini_checks():
    t = np.arange(5.0)
    ok = dini_nonincreasing(MetricSeries(t, np.array([4.0, 3.0, 2.5, 2.5, 2.4])), 0.0)
    assert ok.nonincreasing and ok.first_violation_time is None
    assert ok.worst_excess <= 0.0

    bad = dini_nonincreasing(MetricSeries(t, np.array([4.0, 3.0, 3.5, 2.0, 1.0])), 0.0)
    assert not bad.nonincreasing
    assert bad.first_violation_time == 1.0
    assert bad.worst_excess == 0.5

    # a per-sample slack band admits the same rise
    band = dini_nonincreasing(
        MetricSeries(t, np.array([4.0, 3.0, 3.5, 2.0, 1.0])), np.full(5, 0.6)
    )
    assert band.nonincreasing

    with pytest.raises(ValueError):
        dini_nonincreasing(MetricSeries(t, np.zeros((5, 2))), 0.0)
    with pytest.raises(ValueError):
        dini_nonincreasing(MetricSeries(t, np.zeros(5)), np.zeros(3))


def test_consensus_diameter_anchors():
    assert consensus_diameter(np.array([[0.0], [1.0]])) == 1.0
    assert consensus_diameter(np.array([[0.0, 0.0], [3.0, 4.0]])) == 5.0
    batch = np.stack([np.zeros((2, 2)), np.array([[0.0, 0.0], [3.0, 4.0]])])
    assert np.array_equal(consensus_diameter(batch), [0.0, 5.0])
    with pytest.raises(ValueError):
        consensus_diameter(np.zeros(3))


def test_trajectory_metric_anchors():
    obj = two_node_quadratics()
    traj = _flat_trajectory([[1.0], [2.0]])
    gaps = optimality_gap(traj, obj, 2.25)
    assert np.allclose(gaps.values, 0.25, atol=1e-15)
    res = node_optimum_residuals(traj, obj)
    assert np.array_equal(res.values, [[1.0, 1.0], [1.0, 1.0]])
    gn = gradient_norm_series(traj, obj)
    assert np.array_equal(gn.values, [[1.0, 1.0], [1.0, 1.0]])
    assert np.array_equal(diameter_series(traj).values, [1.0, 1.0])


def test_optimality_gap_at_large_gain_stationary_point():
    obj = two_node_quadratics()
    traj = _flat_trajectory([[10.0 / 7.0], [11.0 / 7.0]])
    gaps = optimality_gap(traj, obj, 2.25)
    assert np.allclose(gaps.values, 1.0 / 196.0, atol=1e-12)


def test_detect_convergence_modes():
    obj = ObjectiveSet(
        [SquaredDistance(Ball([0.0], 1.0)), SquaredDistance(Ball([0.5], 1.0))]
    )
    scen = Scenario(obj, two_node_graph(), [4.0, -3.0], tf=30.0)
    status, t = detect_convergence(integrate(scen), obj)
    assert status == "converged" and 0.0 < t < 30.0

    quad = two_node_quadratics()
    scen2 = Scenario(quad, two_node_graph(), [0.0, 3.0], tf=10.0)
    status2, t2 = detect_convergence(integrate(scen2), quad)
    assert (status2, t2) == ("horizon", 10.0)


# --- stationary oracle -------------------------------------------------------

def test_stationary_unit_gain_anchor():
    sp = stationary_quadratic(two_node_quadratics(), two_node_graph(), 1.0)
    assert np.allclose(sp.states, [[1.0], [2.0]], atol=1e-12)
    assert sp.residual <= 1e-9
    assert abs(sp.disagreement - np.sqrt(0.5)) <= 1e-12
    assert abs(sp.grad_norm - np.sqrt(2.0)) <= 1e-12
    assert np.allclose(sp.mean_state, [1.5], atol=1e-12)


def test_stationary_gain_grid_matches_closed_form():
    obj = two_node_quadratics()
    g = two_node_graph()
    for gain in (1.0, 10.0, 100.0):
        sp = stationary_quadratic(obj, g, gain)
        lo = 3.0 * gain / (2.0 * gain + 1.0)
        assert np.allclose(sp.states, [[lo], [lo + 3.0 / (2.0 * gain + 1.0)]], atol=1e-12)
        assert abs(sp.disagreement - 3.0 / (np.sqrt(2.0) * (2.0 * gain + 1.0))) <= 1e-12


def test_stationary_zero_gain_decouples():
    sp = stationary_quadratic(two_node_quadratics(), two_node_graph(), 0.0)
    assert np.allclose(sp.states, [[0.0], [3.0]], atol=1e-12)
    assert sp.grad_norm <= 1e-12


def test_stationary_identical_centers_agree():
    obj = ObjectiveSet([Quadratic([[1.0]], [2.0]), Quadratic([[1.0]], [2.0])])
    sp = stationary_quadratic(obj, two_node_graph(), 5.0)
    assert np.allclose(sp.states, 2.0, atol=1e-12)
    assert sp.disagreement <= 1e-12


def test_stationary_preconditions():
    obj = two_node_quadratics()
    with pytest.raises(ValueError, match="symmetric"):
        stationary_quadratic(obj, WeightedDigraph(2, {(0, 1): 1.0}), 1.0)
    with pytest.raises(ValueError, match="quadratic"):
        stationary_quadratic(
            ball_objectives([[1.0, 0.0], [0.0, 1.0]], slack=0.5),
            WeightedDigraph.complete(2),
            1.0,
        )
    with pytest.raises(ValueError, match="nonnegative"):
        stationary_quadratic(obj, two_node_graph(), -1.0)
    with pytest.raises(ValueError, match="node count"):
        stationary_quadratic(obj, WeightedDigraph.complete(3), 1.0)


def test_stationary_singular_system():
    flat = ObjectiveSet([Quadratic([[0.0]], [0.0]), Quadratic([[0.0]], [0.0])])
    with pytest.raises(ValueError, match="singular"):
        stationary_quadratic(flat, two_node_graph(), 1.0)


# --- disagreement bound ------------------------------------------------------

def test_bound_is_tight_with_own_gradient():
    sp = stationary_quadratic(two_node_quadratics(), two_node_graph(), 10.0)
    chk = check_disagreement_bound(sp, sp.grad_norm, 2.0)
    assert chk.holds
    assert abs(chk.margin) <= 1e-12


def test_bound_over_gain_grid():
    obj = two_node_quadratics()
    g = two_node_graph()
    lam2 = g.lambda2()
    points = [stationary_quadratic(obj, g, k) for k in (1.0, 10.0, 100.0)]
    grad_sup = max(p.grad_norm for p in points)
    margins = []
    for p in points:
        chk = check_disagreement_bound(p, grad_sup, lam2)
        assert chk.holds
        assert chk.margin >= -1e-12
        margins.append(chk.margin)
    # at gain 1 the bound uses the grid-wide gradient supremum, so slack opens
    expected = 150.0 * np.sqrt(2.0) / 201.0 - 3.0 / (3.0 * np.sqrt(2.0))
    assert abs(margins[0] - expected) <= 1e-12
    assert margins[2] == min(margins)


def test_bound_validation():
    sp = stationary_quadratic(two_node_quadratics(), two_node_graph(), 0.0)
    with pytest.raises(ValueError, match="positive gain"):
        check_disagreement_bound(sp, 1.0, 2.0)
    sp10 = stationary_quadratic(two_node_quadratics(), two_node_graph(), 10.0)
    with pytest.raises(ValueError, match="lambda2"):
        check_disagreement_bound(sp10, 1.0, 0.0)


# --- sphere intersection -----------------------------------------------------

def test_sphere_intersection_line_anchor():
    y = sphere_intersection(np.array([[0.0], [3.0]]), np.array([1.0, 4.0]))
    assert np.array_equal(y, [1.0])


def test_sphere_intersection_recovers_planar_point():
    p = np.array([0.3, -1.2])
    centers = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    d = ((p - centers) ** 2).sum(axis=1)
    y = sphere_intersection(centers, d)
    assert np.allclose(y, p, atol=1e-12)


def test_sphere_intersection_rank_check():
    centers = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    with pytest.raises(ValueError, match="affinely dependent"):
        sphere_intersection(centers, np.ones(3))


def test_sphere_intersection_consistency_check():
    centers = np.array([[0.0], [3.0]])
    with pytest.raises(ValueError, match="no point matches"):
        sphere_intersection(centers, np.array([1.0, 100.0]))
    # the same data is accepted under an explicitly loose tolerance
    y = sphere_intersection(centers, np.array([1.0, 100.0]), consistency_tol=300.0)
    assert np.array_equal(y, [-15.0])


def test_sphere_intersection_validation():
    with pytest.raises(ValueError, match="3 centers"):
        sphere_intersection(np.zeros((2, 2)), np.ones(2))
    with pytest.raises(ValueError, match="nonnegative"):
        sphere_intersection(np.array([[0.0], [3.0]]), np.array([-1.0, 4.0]))
    with pytest.raises(ValueError):
        sphere_intersection(np.zeros(3), np.ones(3))


# --- assumption audit --------------------------------------------------------

def test_audit_strictly_convex_quadratics():
    audit = audit_assumptions(two_node_quadratics(), two_node_graph(), (1.0, 10.0, 100.0))
    assert audit.coercive
    assert audit.team_minimum.method == "closed-form"
    assert abs(audit.team_minimum.value - 2.25) <= 1e-12
    assert audit.argmin_bounded is True
    assert audit.grid_gains == [1.0, 10.0, 100.0]
    assert max(audit.grid_max_abs) <= 3.0
    assert audit.grid_bounded is True
    assert audit.notes == []


def test_audit_ball_targets():
    audit = audit_assumptions(ball_objectives([[1.0, 0.0], [0.0, 1.0]], slack=0.5))
    assert not audit.coercive
    assert audit.team_minimum.method == "intersection"
    assert audit.team_minimum.value == 0.0
    assert audit.argmin_bounded is True
    assert any("coercivity" in n for n in audit.notes)


def test_audit_unbounded_targets():
    obj = ObjectiveSet(
        [
            SquaredDistance(Box([0.0], [np.inf])),
            SquaredDistance(Box([-np.inf], [1.0])),
        ]
    )
    audit = audit_assumptions(obj)
    assert not audit.coercive
    assert audit.team_minimum.value == 0.0
    assert audit.argmin_bounded is None
    assert any("unverifiable" in n for n in audit.notes)


def test_audit_grid_needs_symmetric_fixed_graph():
    audit = audit_assumptions(
        two_node_quadratics(), WeightedDigraph(2, {(0, 1): 1.0}), (1.0, 10.0)
    )
    assert audit.grid_gains == []
    assert audit.grid_bounded is None
    assert any("stationary grid skipped" in n for n in audit.notes)


def test_audit_numerical_fallback_note():
    obj = ObjectiveSet(
        [Quadratic([[1.0]], [0.0]), SquaredDistance(Box([2.0], [np.inf]))]
    )
    audit = audit_assumptions(obj)
    assert audit.team_minimum.method == "numerical"
    assert any("numerically" in n for n in audit.notes)


def test_audit_to_dict_round_trip():
    audit = audit_assumptions(two_node_quadratics(), two_node_graph(), (1.0,))
    d = audit.to_dict()
    assert d["coercive"] is True
    assert d["team_minimum"]["method"] == "closed-form"
    assert d["grid_gains"] == [1.0]
    assert isinstance(d["notes"], list)

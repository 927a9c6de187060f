"""Trajectory metrics, stationary-point oracles, and assumption audits."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graphs import WeightedDigraph
from .objectives import (
    GlobalMinimum,
    ObjectiveSet,
    Quadratic,
    SquaredDistance,
    Sum,
    UnsupportedRepresentationError,
    global_min,
    intersection_nonempty,
)


@dataclass
class MetricSeries:
    """Time-indexed metric values; columns index nodes when 2-D."""

    times: np.ndarray
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.ndim != 1 or self.values.shape[0] != self.times.shape[0]:
            raise ValueError("values must align with times along the first axis")

    def max_across(self) -> "MetricSeries":
        """Per-sample maximum over columns."""
        if self.values.ndim == 1:
            return MetricSeries(self.times, self.values.copy(), self.label)
        return MetricSeries(self.times, self.values.max(axis=1), self.label + "-max")

    @property
    def terminal(self):
        return self.values[-1]


def lyapunov_trace(trajectory, z_star) -> MetricSeries:
    """Per-node squared distances ``V_i(t) = |x_i(t) - z_star|^2``."""
    z = np.asarray(z_star, dtype=float)
    if z.shape != (trajectory.m,):
        raise ValueError(f"z_star must have shape ({trajectory.m},)")
    v = ((trajectory.states - z) ** 2).sum(axis=2)
    return MetricSeries(trajectory.times, v, "lyapunov")


@dataclass
class DiniCheck:
    nonincreasing: bool
    first_violation_time: float | None
    worst_excess: float


def dini_nonincreasing(series: MetricSeries, slack) -> DiniCheck:
    """Check forward difference quotients stay below ``slack``.

    ``slack`` may be a scalar or a per-sample array (its last entry is
    unused); pass e.g. ``1e-6 * np.maximum(1.0, v)`` for a relative band.
    """
    v = series.values
    if v.ndim != 1:
        raise ValueError("dini_nonincreasing expects a scalar-valued series; "
                         "reduce with max_across() first")
    dt = np.diff(series.times)
    rate = np.diff(v) / dt
    s = np.asarray(slack, dtype=float)
    if s.ndim == 1:
        if s.shape[0] == v.shape[0]:
            s = s[:-1]
        elif s.shape[0] != rate.shape[0]:
            raise ValueError("slack array must align with the series")
    excess = rate - s
    worst = float(excess.max()) if excess.size else -np.inf
    bad = np.nonzero(excess > 0.0)[0]
    if bad.size:
        return DiniCheck(False, float(series.times[bad[0]]), worst)
    return DiniCheck(True, None, worst)


def consensus_diameter(x) -> np.ndarray | float:
    """Largest pairwise distance between node states.

    Accepts one stacked state ``(n, m)`` or a batch ``(..., n, m)``.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim < 2:
        raise ValueError("need at least (n_nodes, m)")
    diff = x[..., :, None, :] - x[..., None, :, :]
    d = np.linalg.norm(diff, axis=-1)
    out = d.max(axis=(-1, -2))
    return float(out) if out.ndim == 0 else out


def diameter_series(trajectory) -> MetricSeries:
    return MetricSeries(trajectory.times, consensus_diameter(trajectory.states), "diameter")


def optimality_gap(trajectory, objectives: ObjectiveSet, f_star) -> MetricSeries:
    """Per-node gap ``F(x_i(t)) - f_star`` for the team objective F.

    Not clamped: honest values may dip a hair below zero only from floating
    error in ``f_star``.
    """
    gaps = objectives.total_value(trajectory.states) - float(f_star)
    return MetricSeries(trajectory.times, gaps, "optimality-gap")


def node_optimum_residuals(trajectory, objectives: ObjectiveSet) -> MetricSeries:
    """Per-node distance to the node's own argmin set."""
    sets = objectives.argmin_sets()
    cols = [s.distance(trajectory.states[:, i, :]) for i, s in enumerate(sets)]
    return MetricSeries(trajectory.times, np.stack(cols, axis=1), "residual")


def gradient_norm_series(trajectory, objectives: ObjectiveSet) -> MetricSeries:
    g = objectives.stacked_grad(trajectory.states)
    return MetricSeries(trajectory.times, np.linalg.norm(g, axis=2), "grad-norm")


def detect_convergence(trajectory, objectives: ObjectiveSet, tol=1e-6, run_length=100):
    """Classify a run as ("converged", t) or ("horizon", tf).

    Converged means diameter and the largest per-node gradient norm stay
    below ``tol`` for ``run_length`` consecutive samples; the reported time
    is the start of the first such run.
    """
    diam = consensus_diameter(trajectory.states)
    gn = gradient_norm_series(trajectory, objectives).values.max(axis=1)
    ok = (diam <= tol) & (gn <= tol)
    if ok.size >= run_length:
        window = np.convolve(ok.astype(int), np.ones(run_length, dtype=int), mode="valid")
        hits = np.nonzero(window == run_length)[0]
        if hits.size:
            return "converged", float(trajectory.times[hits[0]])
    return "horizon", float(trajectory.times[-1])


@dataclass
class StationaryPoint:
    """Solution of the penalized stationarity system at one gain."""

    states: np.ndarray        # (n_nodes, m)
    gain: float
    residual: float           # norm of K(L (x) I)x + stacked gradient
    mean_state: np.ndarray    # (m,)
    disagreement: float       # sqrt(sum_i |x_i - mean|^2)
    grad_norm: float          # norm of the stacked gradient at the solution


def stationary_quadratic(objectives: ObjectiveSet, graph: WeightedDigraph,
                         gain) -> StationaryPoint:
    """Solve ``(K (L kron I_m) + blockdiag(Q_i)) x = blockdiag(Q_i) c``.

    Valid for all-quadratic objectives on a bidirectional graph with
    symmetric weights; these are exactly the stationary states of the
    gain-weighted penalized objective.  ``gain`` may be zero (decoupled
    minimizers) as long as the system stays nonsingular.
    """
    comps = objectives.components
    if not all(isinstance(c, Quadratic) for c in comps):
        raise ValueError("stationary oracle requires all-quadratic objectives")
    if not graph.has_symmetric_weights(tol=0.0):
        raise ValueError("stationary oracle requires a bidirectional graph "
                         "with symmetric weights")
    if graph.n_nodes != objectives.n_nodes:
        raise ValueError("graph and objectives disagree on the node count")
    gain = float(gain)
    if gain < 0.0:
        raise ValueError("gain must be nonnegative")

    n, m = objectives.n_nodes, objectives.m
    lap = graph.laplacian()
    big_l = np.kron(lap, np.eye(m))
    blocks = np.zeros((n * m, n * m))
    rhs = np.zeros(n * m)
    for i, c in enumerate(comps):
        blocks[i * m:(i + 1) * m, i * m:(i + 1) * m] = c.matrix
        rhs[i * m:(i + 1) * m] = c.matrix @ c.center
    system = gain * big_l + blocks

    try:
        flat = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError:
        rank = np.linalg.matrix_rank(system)
        raise ValueError(
            f"stationary system is singular (rank {rank} of {n * m}); "
            "no isolated stationary point"
        ) from None

    x = flat.reshape(n, m)
    grads = objectives.stacked_grad(x)
    residual = float(np.linalg.norm(gain * (big_l @ flat) + grads.reshape(-1)))
    mean = x.mean(axis=0)
    disagreement = float(np.sqrt(((x - mean) ** 2).sum()))
    return StationaryPoint(x, gain, residual, mean, disagreement,
                           float(np.linalg.norm(grads)))


@dataclass
class BoundCheck:
    holds: bool
    margin: float   # bound - disagreement; may sit at zero up to float error
    bound: float


def check_disagreement_bound(point: StationaryPoint, grad_sup, lam2,
                             slack=1e-12) -> BoundCheck:
    """Verify ``disagreement <= grad_sup / (gain * lambda2)`` up to slack.

    ``grad_sup`` should dominate the stacked gradient norm over the
    stationary points of interest, e.g. the max of ``grad_norm`` over a gain
    grid.
    """
    if point.gain <= 0.0:
        raise ValueError("the bound needs a positive gain")
    lam2 = float(lam2)
    if lam2 <= 0.0:
        raise ValueError("lambda2 must be positive")
    bound = float(grad_sup) / (point.gain * lam2)
    margin = bound - point.disagreement
    return BoundCheck(point.disagreement <= bound + slack, margin, bound)


def sphere_intersection(centers, sq_dists, consistency_tol=1e-9) -> np.ndarray:
    """Recover the unique point at given squared distances from m+1 centers.

    Subtracting the first sphere equation from the rest leaves the linear
    system ``<y, z_j - z_1> = (d_1 - d_j + |z_j|^2 - |z_1|^2) / 2``; the
    centers must be affinely independent (difference rank m).  The candidate
    is then checked against the first sphere to ``consistency_tol``.
    """
    z = np.asarray(centers, dtype=float)
    d = np.asarray(sq_dists, dtype=float)
    if z.ndim != 2:
        raise ValueError("centers must be shaped (m + 1, m)")
    k, m = z.shape
    if k != m + 1:
        raise ValueError(f"need exactly {m + 1} centers in dimension {m}, got {k}")
    if d.shape != (k,) or np.any(d < 0.0):
        raise ValueError("sq_dists must be nonnegative, one per center")

    a = z[1:] - z[0]
    rank = np.linalg.matrix_rank(a)
    if rank < m:
        raise ValueError(
            f"centers are affinely dependent (difference rank {rank} < {m})"
        )
    rhs = 0.5 * (d[0] - d[1:] + (z[1:] ** 2).sum(axis=1) - (z[0] ** 2).sum())
    y = np.linalg.solve(a, rhs)
    defect = abs(float(((y - z[0]) ** 2).sum()) - float(d[0]))
    if defect > consistency_tol:
        raise ValueError(
            f"no point matches the given squared distances (defect {defect:.3e})"
        )
    return y


def _certified_coercive(component) -> bool:
    # Conservative certificate: strictly convex quadratics only.  Squared
    # distances are flat on their target set and are never certified here.
    if isinstance(component, Quadratic):
        return component.is_positive_definite
    if isinstance(component, Sum):
        return any(_certified_coercive(p) for p in component.parts)
    return False


@dataclass
class AssumptionAudit:
    """Report-only feasibility audit for a scenario's objective collection."""

    coercive: bool
    team_minimum: GlobalMinimum | None
    argmin_bounded: bool | None          # None = unverifiable
    grid_gains: list = field(default_factory=list)
    grid_max_abs: list = field(default_factory=list)
    grid_bounded: bool | None = None
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        gm = None
        if self.team_minimum is not None:
            gm = {
                "value": self.team_minimum.value,
                "minimizer": np.asarray(self.team_minimum.minimizer).tolist(),
                "method": self.team_minimum.method,
                "tolerance": self.team_minimum.tolerance,
            }
        return {
            "coercive": self.coercive,
            "team_minimum": gm,
            "argmin_bounded": self.argmin_bounded,
            "grid_gains": list(self.grid_gains),
            "grid_max_abs": list(self.grid_max_abs),
            "grid_bounded": self.grid_bounded,
            "notes": list(self.notes),
        }


def audit_assumptions(objectives: ObjectiveSet, topology=None,
                      gain_grid=()) -> AssumptionAudit:
    """Best-effort feasibility audit; never raises on negative findings.

    Certifies coercivity conservatively, locates the team minimum when a
    closed form or intersection witness exists, and, when a stationary
    oracle applies, tabulates stationary-state magnitudes over a gain grid
    to flag divergence.
    """
    comps = objectives.components
    notes = []
    coercive = all(_certified_coercive(c) for c in comps)
    if not coercive:
        notes.append("coercivity not certified; flat directions possible")

    team = None
    bounded = None
    try:
        team = global_min(objectives)
        if team.method == "closed-form":
            bounded = True
        elif team.method == "intersection":
            targets = [c.argmin_set() for c in comps]
            bounded = any(s.is_bounded() for s in targets)
            if not bounded:
                bounded = None
                notes.append("team minimum exists but boundedness is unverifiable")
        else:
            notes.append(f"team minimum found numerically "
                         f"(gradient norm {team.tolerance:.2e}); "
                         "existence certificate unavailable")
    except (UnsupportedRepresentationError, ValueError) as err:
        notes.append(f"team minimum unavailable: {err}")

    gains, maxima = [], []
    grid_bounded = None
    gain_grid = list(gain_grid)
    if gain_grid:
        applicable = (
            isinstance(topology, WeightedDigraph)
            and topology.has_symmetric_weights(tol=0.0)
            and all(isinstance(c, Quadratic) for c in comps)
        )
        if not applicable:
            notes.append("stationary grid skipped: needs a fixed symmetric "
                         "graph and all-quadratic objectives")
        else:
            for k in gain_grid:
                try:
                    sp = stationary_quadratic(objectives, topology, k)
                except ValueError as err:
                    notes.append(f"gain {k}: {err}")
                    continue
                gains.append(float(k))
                maxima.append(float(np.abs(sp.states).max()))
            if maxima:
                finite = all(np.isfinite(maxima))
                increasing = all(b > a for a, b in zip(maxima, maxima[1:]))
                blowing_up = increasing and maxima[-1] > 10.0 * maxima[0]
                grid_bounded = bool(finite and not blowing_up)

    return AssumptionAudit(coercive, team, bounded, gains, maxima, grid_bounded, notes)

"""Node dynamics and fixed-step integration.

Each node i runs the first-order rule

    dx_i/dt = law(n_i, g_i) + w_i(t)

where ``n_i = sum_j a_ij (x_j - x_i)`` aggregates in-neighbor disagreement,
``g_i`` is the node's own objective gradient, and ``w_i`` is an optional
disturbance.  States are stacked as arrays of shape ``(n_nodes, m)``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .graphs import SwitchingSignal, WeightedDigraph
from .objectives import ObjectiveSet

DIVERGENCE_LIMIT = 1e8


class DivergenceError(RuntimeError):
    """Integration produced a non-finite or unbounded state."""

    def __init__(self, time, message=None):
        self.time = float(time)
        super().__init__(message or f"state diverged at t={time}")


@dataclass(frozen=True)
class ControlLaw:
    """Velocity rule ``u = gain * n - g``.

    ``gain=1`` is the plain disagreement-minus-gradient rule; larger gains
    weight neighbor agreement more heavily.  With zero disagreement the rule
    reduces to ``-g``, which is injective in the gradient argument.
    """

    gain: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.gain) and self.gain > 0.0):
            raise ValueError("gain must be a positive real")

    def apply(self, n, g):
        return self.gain * np.asarray(n, dtype=float) - np.asarray(g, dtype=float)

    def describe(self) -> dict:
        return {"kind": "gain-law", "gain": self.gain}


class ExponentialDecayDisturbance:
    """Per-node forcing ``w_i(t) = exp(-rate * (t - t_ref)) * v_i``."""

    def __init__(self, vectors, rate=1.0, t_ref=0.0):
        self.vectors = np.asarray(vectors, dtype=float)
        if self.vectors.ndim != 2:
            raise ValueError("vectors must be shaped (n_nodes, m)")
        self.rate = float(rate)
        self.t_ref = float(t_ref)
        if not (self.rate > 0.0 and math.isfinite(self.rate)):
            raise ValueError("rate must be a positive real")

    def __call__(self, t):
        return math.exp(-self.rate * (t - self.t_ref)) * self.vectors

    def describe(self) -> dict:
        return {
            "kind": "exponential",
            "vectors": self.vectors.tolist(),
            "rate": self.rate,
            "t_ref": self.t_ref,
        }


class Scenario:
    """Complete description of one simulation run.

    Parameters
    ----------
    objectives : ObjectiveSet
        One component per node.
    topology : WeightedDigraph or SwitchingSignal
        Fixed graph or piecewise-constant schedule covering ``[t0, tf]``.
    law : ControlLaw, optional
        Any object exposing ``apply(n, g)`` works; the default has gain 1.
    x0 : array
        Initial stacked state, shape ``(n_nodes, m)`` (a flat vector of
        length ``n_nodes * m`` is accepted and reshaped).
    t0, tf : float
        Integration window, ``t0 < tf``.
    step : float, optional
        Fixed integrator step (default 0.01).
    disturbance : callable, optional
        Maps ``t`` to an additive ``(n_nodes, m)`` forcing term.
    """

    def __init__(self, objectives, topology, x0, tf, t0=0.0, law=None,
                 step=0.01, disturbance=None, name=""):
        if not isinstance(objectives, ObjectiveSet):
            raise TypeError("objectives must be an ObjectiveSet")
        if not isinstance(topology, (WeightedDigraph, SwitchingSignal)):
            raise TypeError("topology must be a WeightedDigraph or SwitchingSignal")
        if topology.n_nodes != objectives.n_nodes:
            raise ValueError(
                f"topology has {topology.n_nodes} nodes but objectives define "
                f"{objectives.n_nodes}"
            )
        self.objectives = objectives
        self.topology = topology
        self.law = law if law is not None else ControlLaw()

        n, m = objectives.n_nodes, objectives.m
        x0 = np.asarray(x0, dtype=float)
        if x0.ndim == 1 and x0.size == n * m:
            x0 = x0.reshape(n, m)
        if x0.shape != (n, m):
            raise ValueError(f"x0 must have shape ({n}, {m})")
        if not np.isfinite(x0).all():
            raise ValueError("x0 must be finite")
        self.x0 = x0.copy()
        self.x0.flags.writeable = False

        self.t0 = float(t0)
        self.tf = float(tf)
        if not self.t0 < self.tf:
            raise ValueError("tf must exceed t0")
        self.step = float(step)
        if not (self.step > 0.0 and math.isfinite(self.step)):
            raise ValueError("step must be a positive real")
        if isinstance(topology, SwitchingSignal):
            if self.t0 < topology.start_time:
                raise ValueError("t0 precedes the schedule start")
            if topology.horizon is not None and self.tf > topology.horizon:
                raise ValueError("tf exceeds the schedule horizon")
        self.disturbance = disturbance
        self.name = str(name)

    @property
    def n_nodes(self) -> int:
        return self.objectives.n_nodes

    @property
    def m(self) -> int:
        return self.objectives.m

    def describe(self) -> dict:
        if self.disturbance is None:
            dist = None
        elif hasattr(self.disturbance, "describe"):
            dist = self.disturbance.describe()
        else:
            dist = {"kind": "custom"}
        law = self.law.describe() if hasattr(self.law, "describe") else {"kind": "custom"}
        return {
            "name": self.name,
            "objectives": self.objectives.describe(),
            "topology": self.topology.describe(),
            "law": law,
            "x0": self.x0.tolist(),
            "t0": self.t0,
            "tf": self.tf,
            "step": self.step,
            "disturbance": dist,
        }

    @property
    def fingerprint(self) -> str:
        blob = json.dumps(self.describe(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()

    def graph_at(self, t) -> WeightedDigraph:
        if isinstance(self.topology, WeightedDigraph):
            return self.topology
        return self.topology.graph_at(t)


@dataclass
class Trajectory:
    """Sampled solution: ``states[k]`` is the stacked state at ``times[k]``.

    Sample points are every integrator step endpoint, so switch instants and
    the final time appear exactly.
    """

    times: np.ndarray       # (T,)
    states: np.ndarray      # (T, n_nodes, m)
    fingerprint: str = ""
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.times.ndim != 1 or self.states.ndim != 3:
            raise ValueError("times must be (T,) and states (T, n_nodes, m)")
        if self.times.shape[0] != self.states.shape[0]:
            raise ValueError("times and states disagree on sample count")
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("times must be strictly increasing")

    @property
    def n_nodes(self) -> int:
        return self.states.shape[1]

    @property
    def m(self) -> int:
        return self.states.shape[2]

    @property
    def terminal_state(self) -> np.ndarray:
        return self.states[-1]


def neighbor_info(graph: WeightedDigraph, x) -> np.ndarray:
    """Weighted in-neighbor disagreement ``n_i = sum_j a_ij (x_j - x_i)``.

    Differences are formed per arc, so exact consensus states give exactly
    zero (no cancellation error).
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] != graph.n_nodes:
        raise ValueError(f"x must be shaped ({graph.n_nodes}, m)")
    src, dst, w = graph.arc_arrays()
    if src.size == 0:
        return np.zeros_like(x)
    return graph.aggregation_matrix() @ (w[:, None] * (x[src] - x[dst]))


def rhs(scenario: Scenario, t, x) -> np.ndarray:
    """Stacked state velocity at time ``t``."""
    t = float(t)
    if not scenario.t0 <= t <= scenario.tf:
        raise ValueError(f"time {t} outside [{scenario.t0}, {scenario.tf}]")
    x = np.asarray(x, dtype=float)
    graph = scenario.graph_at(t)
    u = scenario.law.apply(neighbor_info(graph, x), scenario.objectives.stacked_grad(x))
    if scenario.disturbance is not None:
        u = u + np.asarray(scenario.disturbance(t), dtype=float)
    return u


def _segment_field(scenario: Scenario, graph: WeightedDigraph):
    src, dst, w = graph.arc_arrays()
    agg = graph.aggregation_matrix()
    wcol = w[:, None]
    grad = scenario.objectives.stacked_grad
    law = scenario.law
    disturbance = scenario.disturbance
    has_arcs = src.size > 0

    def field(t, y):
        if has_arcs:
            n = agg @ (wcol * (y[src] - y[dst]))
        else:
            n = np.zeros_like(y)
        u = law.apply(n, grad(y))
        if disturbance is not None:
            u = u + disturbance(t)
        return u

    return field


def integrate(scenario: Scenario) -> Trajectory:
    """Classical 4th-order Runge-Kutta with a fixed step.

    Each constant-topology segment is integrated independently; the final
    substep of a segment is truncated so switch instants and ``tf`` land on
    exact sample points.  The run is deterministic: identical scenarios give
    bit-identical trajectories.
    """
    t0, tf, h = scenario.t0, scenario.tf, scenario.step
    if isinstance(scenario.topology, SwitchingSignal):
        switches = scenario.topology.switch_times(t0, tf)
    else:
        switches = []
    bounds = [t0] + switches + [tf]

    x = scenario.x0.copy()
    times = [t0]
    states = [x.copy()]
    steps = 0

    for a, b in zip(bounds, bounds[1:]):
        fieldfn = _segment_field(scenario, scenario.graph_at(a))
        n_sub = max(1, int(math.ceil((b - a) / h - 1e-9)))
        for k in range(n_sub):
            t_k = a + k * h
            t_next = b if k == n_sub - 1 else a + (k + 1) * h
            hk = t_next - t_k
            half = 0.5 * hk
            k1 = fieldfn(t_k, x)
            k2 = fieldfn(t_k + half, x + half * k1)
            k3 = fieldfn(t_k + half, x + half * k2)
            k4 = fieldfn(t_next, x + hk * k3)
            x = x + (hk / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.isfinite(x).all() or np.abs(x).max() > DIVERGENCE_LIMIT:
                raise DivergenceError(t_next)
            times.append(t_next)
            states.append(x.copy())
        steps += n_sub

    stats = {
        "steps": steps,
        "rhs_evaluations": 4 * steps,
        "segments": len(bounds) - 1,
    }
    return Trajectory(np.array(times), np.stack(states), scenario.fingerprint, stats)

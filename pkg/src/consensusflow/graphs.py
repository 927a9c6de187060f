"""Weighted digraphs, Laplacians, and piecewise-constant graph schedules."""

from __future__ import annotations

import bisect
from types import MappingProxyType

import numpy as np

Arc = tuple[int, int]


class WeightedDigraph:
    """Weighted directed graph on nodes ``0 .. n_nodes-1``.

    An arc ``(j, i)`` leaves node ``j`` and enters node ``i``; its weight is
    the coupling gain node ``i`` applies to information received from ``j``.
    Self-loops are rejected, weights must be positive, and instances are
    treated as immutable.

    Parameters
    ----------
    n_nodes : int
        Number of nodes, at least 1.
    weights : mapping, optional
        Maps arcs ``(j, i)`` to positive weights.  Omitted means no arcs.
    weight_bounds : (float, float), optional
        Declared bounds ``0 < low <= high``; every weight must fall inside.
    """

    def __init__(self, n_nodes, weights=None, weight_bounds=None):
        n_nodes = int(n_nodes)
        if n_nodes < 1:
            raise ValueError("n_nodes must be at least 1")
        self._n = n_nodes

        if weight_bounds is not None:
            low, high = float(weight_bounds[0]), float(weight_bounds[1])
            if not (0.0 < low <= high):
                raise ValueError("weight bounds must satisfy 0 < low <= high")
            weight_bounds = (low, high)
        self._bounds = weight_bounds

        cleaned = {}
        for arc, w in dict(weights or {}).items():
            j, i = int(arc[0]), int(arc[1])
            if not (0 <= j < n_nodes and 0 <= i < n_nodes):
                raise ValueError(f"arc ({j}, {i}) is outside node range 0..{n_nodes - 1}")
            if j == i:
                raise ValueError(f"self-loop ({j}, {i}) is not allowed")
            w = float(w)
            if not np.isfinite(w) or w <= 0.0:
                raise ValueError(f"arc ({j}, {i}): weights must be positive, got {w}")
            if weight_bounds is not None and not (weight_bounds[0] <= w <= weight_bounds[1]):
                raise ValueError(
                    f"arc ({j}, {i}): weight {w} violates declared bounds {weight_bounds}"
                )
            cleaned[(j, i)] = w
        self._weights = cleaned

        arcs = sorted(cleaned)
        self._src = np.array([a[0] for a in arcs], dtype=np.intp)
        self._dst = np.array([a[1] for a in arcs], dtype=np.intp)
        self._w = np.array([cleaned[a] for a in arcs], dtype=float)
        # in-aggregation matrix: row i sums weighted differences over arcs entering i
        self._agg = np.zeros((n_nodes, len(arcs)))
        self._agg[self._dst, np.arange(len(arcs))] = 1.0

    @classmethod
    def from_arcs(cls, n_nodes, arcs, weight=1.0, weight_bounds=None):
        """Build a graph with one common weight on every listed arc."""
        return cls(n_nodes, {tuple(a): weight for a in arcs}, weight_bounds)

    @classmethod
    def directed_cycle(cls, n_nodes, weight=1.0):
        return cls.from_arcs(n_nodes, [(k, (k + 1) % n_nodes) for k in range(n_nodes)], weight)

    @classmethod
    def complete(cls, n_nodes, weight=1.0):
        arcs = [(j, i) for j in range(n_nodes) for i in range(n_nodes) if j != i]
        return cls.from_arcs(n_nodes, arcs, weight)

    @classmethod
    def bidirectional_path(cls, n_nodes, weight=1.0):
        arcs = []
        for k in range(n_nodes - 1):
            arcs += [(k, k + 1), (k + 1, k)]
        return cls.from_arcs(n_nodes, arcs, weight)

    @property
    def n_nodes(self) -> int:
        return self._n

    @property
    def arcs(self) -> frozenset:
        return frozenset(self._weights)

    @property
    def weights(self):
        return MappingProxyType(self._weights)

    @property
    def weight_bounds(self):
        return self._bounds

    def arc_arrays(self):
        """Return ``(src, dst, weight)`` arrays sorted by arc."""
        return self._src, self._dst, self._w

    def aggregation_matrix(self) -> np.ndarray:
        """0/1 matrix mapping per-arc values to their entering node."""
        return self._agg

    def adjacency(self) -> np.ndarray:
        """A[i, j] holds the weight of arc (j, i), zero when absent."""
        a = np.zeros((self._n, self._n))
        a[self._dst, self._src] = self._w
        return a

    def laplacian(self) -> np.ndarray:
        """In-degree Laplacian ``D - A``; rows sum to zero."""
        a = self.adjacency()
        return np.diag(a.sum(axis=1)) - a

    def in_neighbors(self, i):
        return [j for (j, k) in self._weights if k == i]

    def _reachable(self, root, reverse=False) -> np.ndarray:
        seen = np.zeros(self._n, dtype=bool)
        seen[root] = True
        stack = [root]
        fwd = {}
        for (j, i) in self._weights:
            if reverse:
                j, i = i, j
            fwd.setdefault(j, []).append(i)
        while stack:
            u = stack.pop()
            for v in fwd.get(u, ()):
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
        return seen

    def is_strongly_connected(self) -> bool:
        """True iff every node reaches every other along directed arcs."""
        if self._n == 1:
            return True
        return bool(self._reachable(0).all() and self._reachable(0, reverse=True).all())

    def has_spanning_tree(self) -> bool:
        """True iff some root reaches all nodes along directed arcs."""
        return any(self._reachable(r).all() for r in range(self._n))

    def is_bidirectional(self) -> bool:
        """True iff the arc set is symmetric (weights may still differ)."""
        return all((i, j) in self._weights for (j, i) in self._weights)

    def has_symmetric_weights(self, tol=0.0) -> bool:
        if not self.is_bidirectional():
            return False
        return all(
            abs(w - self._weights[(i, j)]) <= tol for (j, i), w in self._weights.items()
        )

    def lambda2(self) -> float:
        """Second-smallest Laplacian eigenvalue of a connected symmetric graph.

        Requires a bidirectional arc set with symmetric weights, so the
        Laplacian is symmetric PSD and the spectrum is real.  Ties in the
        second eigenvalue are fine; the sorted value is returned.
        """
        if not self.has_symmetric_weights(tol=0.0):
            raise ValueError("lambda2 requires a bidirectional graph with symmetric weights")
        if not self.is_strongly_connected():
            raise ValueError("lambda2 requires a connected graph")
        if self._n == 1:
            raise ValueError("lambda2 is undefined on a single node")
        eigs = np.linalg.eigvalsh(self.laplacian())
        return float(eigs[1])

    def describe(self) -> dict:
        return {
            "kind": "digraph",
            "n_nodes": self._n,
            "arcs": [[int(j), int(i), self._weights[(j, i)]] for (j, i) in sorted(self._weights)],
            "weight_bounds": list(self._bounds) if self._bounds else None,
        }

    def __eq__(self, other):
        if not isinstance(other, WeightedDigraph):
            return NotImplemented
        return self._n == other._n and self._weights == other._weights

    def __hash__(self):
        return hash((self._n, frozenset(self._weights.items())))

    def __repr__(self):
        return f"WeightedDigraph(n_nodes={self._n}, arcs={len(self._weights)})"


class SwitchingSignal:
    """Piecewise-constant schedule of graphs over time.

    ``intervals`` is a sequence of ``(start, graph)`` pairs with strictly
    increasing starts; the k-th graph is active on ``[start_k, start_{k+1})``.
    Exactly one of ``horizon`` (finite end time) or ``period`` (the pattern
    repeats with that period) must be given.  Consecutive starts, and the
    wrap-around gap for periodic signals, must respect the dwell time.
    """

    def __init__(self, intervals, dwell, horizon=None, period=None):
        items = [(float(t), g) for (t, g) in intervals]
        if not items:
            raise ValueError("at least one interval is required")
        starts = [t for t, _ in items]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("interval starts must be strictly increasing")
        n_set = {g.n_nodes for _, g in items}
        if len(n_set) != 1:
            raise ValueError("all graphs in a schedule must share the node count")
        dwell = float(dwell)
        if dwell <= 0.0:
            raise ValueError("dwell time must be positive")
        if (horizon is None) == (period is None):
            raise ValueError("exactly one of horizon or period must be given")

        gaps = [b - a for a, b in zip(starts, starts[1:])]
        if period is not None:
            period = float(period)
            if period <= 0.0:
                raise ValueError("period must be positive")
            span = starts[-1] - starts[0]
            if span >= period:
                raise ValueError("intervals must fit inside one period")
            gaps.append(starts[0] + period - starts[-1])
        else:
            horizon = float(horizon)
            if horizon <= starts[-1]:
                raise ValueError("horizon must exceed the last interval start")
            gaps.append(horizon - starts[-1])
        bad = [g for g in gaps if g < dwell - 1e-12]
        if bad:
            raise ValueError(
                f"interval gap {min(bad)} is smaller than the dwell time {dwell}"
            )

        self._items = items
        self._starts = starts
        self._dwell = dwell
        self._horizon = horizon
        self._period = period

    @property
    def n_nodes(self) -> int:
        return self._items[0][1].n_nodes

    @property
    def dwell(self) -> float:
        return self._dwell

    @property
    def start_time(self) -> float:
        return self._starts[0]

    @property
    def horizon(self):
        return self._horizon

    @property
    def period(self):
        return self._period

    @property
    def is_periodic(self) -> bool:
        return self._period is not None

    def _check_inside(self, t):
        if t < self._starts[0]:
            raise ValueError(f"time {t} precedes the schedule start {self._starts[0]}")
        if self._horizon is not None and t >= self._horizon:
            raise ValueError(f"time {t} is outside the schedule horizon {self._horizon}")

    def graph_at(self, t) -> WeightedDigraph:
        """Graph active at time ``t`` (intervals are closed-open)."""
        t = float(t)
        self._check_inside(t)
        if self._period is not None:
            t = self._starts[0] + (t - self._starts[0]) % self._period
        k = bisect.bisect_right(self._starts, t) - 1
        return self._items[k][1]

    def switch_times(self, t1, t2):
        """Sorted switch instants strictly inside ``(t1, t2)``."""
        t1, t2 = float(t1), float(t2)
        if t2 <= t1:
            return []
        base = self._starts[0]
        out = []
        if self._period is None:
            out = [s for s in self._starts[1:] if t1 < s < t2]
        else:
            p = self._period
            offsets = [s - base for s in self._starts] + [p]  # period wrap is a switch
            k0 = int(np.floor((t1 - base) / p)) - 1
            k1 = int(np.ceil((t2 - base) / p)) + 1
            for k in range(k0, k1 + 1):
                for off in offsets[1:]:
                    s = base + k * p + off
                    if t1 < s < t2:
                        out.append(s)
        return sorted(set(out))

    def joint_graph(self, t1, t2) -> WeightedDigraph:
        """Union of arcs active anywhere on ``[t1, t2)``.

        A repeated arc takes the weight of its latest activation inside the
        window.
        """
        t1, t2 = float(t1), float(t2)
        if t2 <= t1:
            raise ValueError("joint graph needs t1 < t2")
        self._check_inside(t1)
        if self._horizon is not None:
            if t2 > self._horizon:
                raise ValueError(f"window end {t2} is outside the schedule horizon")
        elif t2 - t1 >= self._period:
            # one full period already covers every interval; keep latest weights
            t1 = t2 - self._period
        merged = {}
        t = t1
        cuts = self.switch_times(t1, t2) + [t2]
        for nxt in cuts:
            merged.update(self.graph_at(t).weights)
            t = nxt
        return WeightedDigraph(self.n_nodes, merged)

    def check_ujsc(self, window) -> bool:
        """Uniform joint strong connectivity over windows of the given length.

        Window placements are sampled at the switch-induced breakpoints of
        ``t -> joint_graph(t, t + window)`` plus one interior point per cell;
        connectivity of the union can only change at those breakpoints.  For
        finite-horizon schedules only windows inside the horizon are checked,
        falling back to the whole-span union when the horizon is shorter than
        the window.
        """
        window = float(window)
        if window <= 0.0:
            raise ValueError("window must be positive")
        base = self._starts[0]
        if self._period is not None:
            p = self._period
            lo, hi = base, base + p
            pts = {base + (s - base) % p for s in self._starts}
            pts |= {base + (s - window - base) % p for s in self._starts}
            pts = sorted(pts)
            cells = list(zip(pts, pts[1:] + [pts[0] + p]))
            samples = pts + [0.5 * (a + b) for a, b in cells]
        else:
            hi = self._horizon - window
            if hi <= base:
                return self.joint_graph(base, self._horizon).is_strongly_connected()
            pts = {base, hi}
            pts |= {s for s in self._starts if base < s < hi}
            pts |= {s - window for s in self._starts if base < s - window < hi}
            pts = sorted(pts)
            samples = pts + [0.5 * (a + b) for a, b in zip(pts, pts[1:])]
        return all(
            self.joint_graph(t, t + window).is_strongly_connected() for t in samples
        )

    def describe(self) -> dict:
        return {
            "kind": "switching",
            "dwell": self._dwell,
            "horizon": self._horizon,
            "period": self._period,
            "intervals": [[t, g.describe()] for t, g in self._items],
        }

    def __repr__(self):
        tail = f"period={self._period}" if self._period is not None else f"horizon={self._horizon}"
        return f"SwitchingSignal(intervals={len(self._items)}, dwell={self._dwell}, {tail})"

"""Local unstable disks W^u(x, delta), their leafwise and Bowen metrics.

Charts parameterize the disk by leafwise arclength s in [-delta, delta], so
d^u(chart(s), chart(t)) = |s - t| by construction.  All leafwise work happens
on lifts to R^d; reduction mod 1 only enters through map evaluation.  Charts
for perturbed systems come from the graph-transform contraction over the
linear unstable direction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline, PchipInterpolator

from .dynamics import LinearPHSystem, PerturbedSystem, reduce_point, torus_distance
from .errors import (
    DepthError,
    NoConvergenceError,
    ParameterRangeError,
    RadiusError,
    UnsupportedStructureError,
)

RADIUS_CAP = 0.25  # half the torus injectivity radius, leaf arclength units
GRAPH_NODES = 257
LIFT_BUDGET = 1.0e4
PARAM_TOL = 1e-12


def _fiber_frame(sys):
    """Columns [v_u, fiber...] spanning R^d, fibers = stable then center."""
    cols = [sys.unstable_direction] + list(sys.stable_basis) + list(sys.center_basis)
    basis = np.column_stack(cols)
    if basis.shape[0] != basis.shape[1]:
        raise UnsupportedStructureError("splitting does not span the tangent space")
    return basis


@dataclass
class LeafChart:
    """Arclength parameterization of W^u(x, delta).

    kind "exact-linear": the affine segment x + s * frame.
    kind "graph-transform": a graph over the linear unstable direction with
    fiber values at Chebyshev-style nodes, arclength-reparameterized.
    """

    system: object
    center: np.ndarray  # reduced
    center_lift: np.ndarray
    radius: float
    frame: np.ndarray  # unit vector spanning E^u at the center
    kind: str
    residual: float = 0.0
    residual_history: list = field(default_factory=list)
    # graph-transform payload
    nodes: np.ndarray | None = None  # graph coordinate u at nodes
    fiber_values: np.ndarray | None = None  # (nfibers, nnodes)
    _basis: np.ndarray | None = None  # columns [v_u, fibers]
    _u_of_s: object | None = None
    _s_of_u: object | None = None
    _fiber_splines: list | None = None

    def param_check(self, s):
        s = np.asarray(s, float)
        if np.any(s < -self.radius - PARAM_TOL) or np.any(s > self.radius + PARAM_TOL):
            raise ParameterRangeError("parameter outside [-delta, delta]", radius=self.radius)
        return np.clip(s, -self.radius, self.radius)

    def lift_points(self, s):
        """Lifted chart points for arclength parameters s (scalar or array)."""
        s = self.param_check(s)
        if self.kind == "exact-linear":
            return self.center_lift + np.multiply.outer(s, self.frame)
        u = np.asarray(self._u_of_s(s), float)
        pts = self.center_lift + np.multiply.outer(u, self._basis[:, 0])
        for k, spline in enumerate(self._fiber_splines):
            pts = pts + np.multiply.outer(np.asarray(spline(u), float), self._basis[:, k + 1])
        return pts

    def point(self, s):
        """Torus point at arclength parameter s."""
        return reduce_point(self.lift_points(s))

    def to_json_dict(self):
        out = {
            "kind": self.kind,
            "center": self.center.tolist(),
            "radius": self.radius,
            "frame": self.frame.tolist(),
            "residual": self.residual,
        }
        if self.nodes is not None:
            out["nodes"] = self.nodes.tolist()
            out["fiber_values"] = self.fiber_values.tolist()
        return out


def du_distance(chart, s, t):
    """Leafwise arclength between two chart points.

    Parameters are arclength by construction (the integration happens once,
    at chart build time), so this is |s - t| after range validation.
    """
    s = float(chart.param_check(s))
    t = float(chart.param_check(t))
    return abs(s - t)


def _chebyshev_nodes(halfwidth, n=GRAPH_NODES):
    k = np.arange(n)
    return -halfwidth * np.cos(np.pi * k / (n - 1))


def _arclength_maps(nodes, fiber_splines, radius):
    """Build s(u) and u(s) from the graph parameterization.

    Composite trapezoid over a grid 4x denser than the node set.
    """
    dense = np.linspace(nodes[0], nodes[-1], 4 * len(nodes) + 1)
    speed = np.ones_like(dense)
    acc = np.zeros_like(dense)
    for spline in fiber_splines:
        d = np.asarray(spline(dense, 1), float)
        acc = acc + d * d
    speed = np.sqrt(1.0 + acc)
    sigma = cumulative_trapezoid(speed, dense, initial=0.0)
    sigma = sigma - np.interp(0.0, dense, sigma)  # s = 0 at the center
    s_of_u = PchipInterpolator(dense, sigma)
    u_of_s = PchipInterpolator(sigma, dense)
    if sigma[-1] < radius - PARAM_TOL or sigma[0] > -radius + PARAM_TOL:
        raise RadiusError("graph does not reach the requested arclength radius")
    return s_of_u, u_of_s


def _linear_chart(sys, x, delta):
    x = reduce_point(x)
    frame = np.asarray(sys.unstable_direction, float)
    return LeafChart(
        system=sys,
        center=x,
        center_lift=x.astype(float),
        radius=float(delta),
        frame=frame,
        kind="exact-linear",
    )


def _graph_chart_from_values(sys, center_lift, delta, basis, nodes, fibers, residual, history):
    splines = [CubicSpline(nodes, fv) for fv in fibers]
    s_of_u, u_of_s = _arclength_maps(nodes, splines, delta)
    tangent = basis[:, 0] + sum(
        float(sp(0.0, 1)) * basis[:, k + 1] for k, sp in enumerate(splines)
    )
    tangent = tangent / np.linalg.norm(tangent)
    return LeafChart(
        system=sys,
        center=reduce_point(center_lift),
        center_lift=np.asarray(center_lift, float),
        radius=float(delta),
        frame=tangent,
        kind="graph-transform",
        residual=residual,
        residual_history=history,
        nodes=nodes,
        fiber_values=np.asarray(fibers),
        _basis=basis,
        _u_of_s=u_of_s,
        _s_of_u=s_of_u,
        _fiber_splines=splines,
    )


def _push_graph(sys, basis, center_lift, nodes, fibers, u_max, target):
    """One graph-transform step: push by f, regraph around `target`.

    `target` is the reduced next orbit point, known independently from the
    backward pass.  Recentering on it each step keeps every coordinate O(1):
    a free forward orbit would grow like rate^k on the cover, and past
    rate^k ~ 1e12 the float spacing wipes out the fractional part entirely.
    """
    pts = center_lift + np.outer(nodes, basis[:, 0])
    for k in range(fibers.shape[0]):
        pts = pts + np.outer(fibers[k], basis[:, k + 1])
    image = sys.lift_map(pts)
    pushed_center = sys.lift_map(center_lift)
    new_center = np.asarray(target, float)
    # deck translation between the pushed lift and the reduced target
    image = image - np.round(pushed_center - new_center)
    rel = image - new_center
    coords = np.linalg.solve(basis, rel.T)  # rows: u then fibers
    t = coords[0]
    if np.any(np.diff(t) <= 0):
        raise NoConvergenceError("pushed graph is not monotone over the unstable direction")
    new_nodes = _chebyshev_nodes(u_max, len(nodes))
    new_fibers = np.empty((fibers.shape[0], len(new_nodes)))
    for k in range(fibers.shape[0]):
        new_fibers[k] = CubicSpline(t, coords[k + 1])(new_nodes)
    return new_center, new_fibers


def _build_graph_chart(sys, x, delta, iterations):
    basis = _fiber_frame(sys)
    nfibers = basis.shape[1] - 1
    u_max = float(delta)
    nodes = _chebyshev_nodes(u_max)

    x0 = reduce_point(x).astype(float)
    backward = [x0]
    for _ in range(iterations):
        backward.append(reduce_point(sys.lift_preimage(backward[-1])))

    def chart_values(depth):
        """Fiber values at x0 after pushing a flat graph from depth preimages.

        Each push re-anchors on the backward orbit: backward errors contract
        under f^-1, so backward[j] is uniformly accurate while a free forward
        orbit would amplify the Newton tolerance by rate^depth.
        """
        center = backward[depth].astype(float)
        fibers = np.zeros((nfibers, len(nodes)))
        for k in range(depth):
            center, fibers = _push_graph(
                sys, basis, center, nodes, fibers, u_max,
                target=backward[depth - k - 1],
            )
        return fibers

    prev = chart_values(0)
    history = []
    for i in range(1, iterations + 1):
        cur = chart_values(i)
        history.append(float(np.max(np.abs(cur - prev))))
        prev = cur
        if i > 5 and history[-1] > 1e-8 and history[-1] >= history[-2] >= history[-3]:
            raise NoConvergenceError(
                "graph-transform residual stopped decreasing", history=history
            )
    residual = history[-1] if history else 0.0
    return _graph_chart_from_values(sys, x0, delta, basis, nodes, prev, residual, history)


def build_leaf_chart(sys, x, delta, iterations=30):
    """Chart for W^u(x, delta): exact for affine systems, graph-transform else."""
    if not delta > 0:
        raise RadiusError("radius must be positive", radius=delta)
    if delta > RADIUS_CAP:
        raise RadiusError(
            "radius exceeds the injectivity cap (chart would self-overlap)",
            radius=delta,
            cap=RADIUS_CAP,
        )
    if isinstance(sys, LinearPHSystem):
        return _linear_chart(sys, x, delta)
    if isinstance(sys, PerturbedSystem):
        if sys.magnitude == 0.0:
            chart = _build_graph_chart(sys, x, delta, iterations=1)
            return chart
        return _build_graph_chart(sys, x, delta, iterations)
    raise UnsupportedStructureError(f"unsupported system type {type(sys)!r}")


def graph_transform_refine(sys, chart, iterations):
    """Re-run the graph-transform contraction to the requested depth.

    The contraction forgets its initial graph, so refinement rebuilds from the
    chart's center; the returned chart carries the residual history.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if not isinstance(sys, PerturbedSystem):
        raise UnsupportedStructureError("graph transform applies to perturbed systems")
    if sys.magnitude > sys.cone_threshold:
        raise NoConvergenceError("magnitude above the cone-preservation threshold")
    return _build_graph_chart(sys, chart.center, chart.radius, iterations)


@dataclass
class LeafSample:
    """Equally spaced arclength parameters with their torus points."""

    chart: LeafChart
    params: np.ndarray
    points: np.ndarray  # (m, d), reduced
    lifts: np.ndarray  # (m, d), on the cover
    max_gap: float


def sample_leaf(chart, m):
    if m < 2:
        raise ValueError("m must be >= 2")
    params = np.linspace(-chart.radius, chart.radius, m)
    lifts = chart.lift_points(params)
    return LeafSample(
        chart=chart,
        params=params,
        points=reduce_point(lifts),
        lifts=lifts,
        max_gap=float(params[1] - params[0]),
    )


class BowenDistanceEvaluator:
    """d^u_n(s, t) = max_{0<=j<=n-1} d^u(f^j chart(s), f^j chart(t)).

    Pushforward data is fully precomputed at construction, so concurrent
    reads are safe and deterministic.  Linear charts use the closed form
    lambda^j |s - t| on the lift (no wrap correction needed).
    """

    def __init__(self, system, chart, depth, dense=2049):
        if depth < 1:
            raise ValueError("depth must be >= 1")
        self.system = system
        self.chart = chart
        self.depth = depth
        if chart.kind == "exact-linear":
            lam = system.unstable_rate
            self._factors = lam ** np.arange(depth)
            if 2.0 * chart.radius * self._factors[-1] > LIFT_BUDGET:
                raise DepthError("pushed-forward leaf exceeds the lift budget")
            self._interp = None
        else:
            grid = np.linspace(-chart.radius, chart.radius, dense)
            pts = chart.lift_points(grid)
            interps = []
            for j in range(depth):
                seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
                arc = np.concatenate([[0.0], np.cumsum(seg)])
                if arc[-1] > LIFT_BUDGET:
                    raise DepthError("pushed-forward leaf exceeds the lift budget")
                arc = arc - np.interp(0.0, grid, arc)
                interps.append(PchipInterpolator(grid, arc))
                if j + 1 < depth:
                    pts = system.lift_map(pts)
            self._interp = interps
            self._factors = None

    def positions(self, params, depth=None):
        """(depth, m) array: leafwise position of f^j(chart(s)) per step j."""
        depth = self.depth if depth is None else depth
        params = np.atleast_1d(np.asarray(params, float))
        if self._factors is not None:
            return np.multiply.outer(self._factors[:depth], params)
        return np.vstack([self._interp[j](params) for j in range(depth)])

    def distance(self, s, t):
        pos = self.positions(np.array([s, t], float))
        return float(np.max(np.abs(pos[:, 0] - pos[:, 1])))


def bowen_distance(ev, s, t):
    """Bowen distance between chart parameters at the evaluator's depth."""
    ev.chart.param_check(s)
    ev.chart.param_check(t)
    return ev.distance(float(s), float(t))


def estimate_comparability_constant(sys, chart, samples=1000, seed=0):
    """Max of d^u / d over sampled pairs; asserts the lower bound d <= d^u."""
    if samples < 2:
        raise ValueError("samples must be >= 2")
    rng = np.random.default_rng(seed)
    s = rng.uniform(-chart.radius, chart.radius, size=(samples, 2))
    ratio = 1.0
    for a, b in s:
        if abs(a - b) < 1e-9:
            continue
        du = abs(a - b)
        d = torus_distance(chart.point(a), chart.point(b))
        if d > du + 1e-9:
            raise AssertionError(f"ambient distance exceeds leafwise distance: {d} > {du}")
        ratio = max(ratio, du / d)
    return float(ratio)

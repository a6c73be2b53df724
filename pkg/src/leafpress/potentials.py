"""Sub-additive potential sequences G = {log g_n}, their algebra, and the
Lyapunov functional G_*(mu) = lim (1/n) integral of log g_n d mu.

Conventions: log g_0 = 0 for every sequence; additive sequences satisfy the
sub-additivity inequality with equality.  Evaluation is pure; batch variants
vectorize over point arrays for the pressure pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    LinearPHSystem,
    reduce_point,
    unstable_cocycle_norm,
    unstable_frame,
)

SUBADD_TOL = 1e-9

# Sentinel for a Lyapunov exponent diverging to -infinity; never a float -inf.
NEG_INFINITY = "-infinity"
LYAPUNOV_FLOOR = -1.0e6


class Potential:
    """Base class: a sub-additive sequence {log g_n} evaluated along orbits."""

    def log_gn(self, sys, x, n):
        raise NotImplementedError

    def log_gn_batch(self, sys, pts, n):
        """Vectorized log g_n over an (m, d) array of points."""
        return np.array([self.log_gn(sys, p, n) for p in np.atleast_2d(pts)])

    def is_additive(self):
        return False

    def describe(self):
        return type(self).__name__


def _iterate_batch(sys, pts, n):
    """Orbit tensor: list of (m, d) arrays f^0 .. f^(n-1) of the given points."""
    out = [np.atleast_2d(reduce_point(pts))]
    for _ in range(n - 1):
        out.append(reduce_point(sys.lift_map(out[-1])))
    return out


@dataclass
class AdditiveBirkhoff(Potential):
    """log g_n(x) = sum_{i<n} phi(f^i x) for a continuous observable phi."""

    phi: object  # callable on (d,) points; batch-aware callables get (m, d)
    name: str = "phi"

    def log_gn(self, sys, x, n):
        if n == 0:
            return 0.0
        return float(np.sum(self.log_gn_batch(sys, np.atleast_2d(x), n)))

    def log_gn_batch(self, sys, pts, n):
        pts = np.atleast_2d(np.asarray(pts, float))
        if n == 0:
            return np.zeros(len(pts))
        total = np.zeros(len(pts))
        for layer in _iterate_batch(sys, pts, n):
            total += np.asarray(self.phi(layer), float)
        return total

    def is_additive(self):
        return True

    def describe(self):
        return f"birkhoff({self.name})"


@dataclass
class CocycleNorm(Potential):
    """log g_n(x) = t * log ||D_x f^n restricted to E^u||."""

    exponent: float = 1.0

    def log_gn(self, sys, x, n):
        if n == 0:
            return 0.0
        return self.exponent * float(np.log(unstable_cocycle_norm(sys, x, n)))

    def log_gn_batch(self, sys, pts, n):
        pts = np.atleast_2d(np.asarray(pts, float))
        if n == 0:
            return np.zeros(len(pts))
        if isinstance(sys, LinearPHSystem):
            val = self.exponent * n * float(np.log(sys.unstable_rate))
            return np.full(len(pts), val)
        out = np.zeros(len(pts))
        frames = np.array([unstable_frame(sys, p) for p in pts])
        cur = reduce_point(pts)
        for _ in range(n):
            jac = sys.jacobian(cur)
            pushed = np.einsum("mab,mb->ma", jac, frames)
            norms = np.linalg.norm(pushed, axis=1)
            out += np.log(norms)
            frames = pushed / norms[:, None]
            cur = reduce_point(sys.lift_map(cur))
        return self.exponent * out

    def describe(self):
        return f"cocycle(t={self.exponent})"


@dataclass
class Constant(Potential):
    """log g_n = n * c (constant rate per step)."""

    rate: float

    def log_gn(self, sys, x, n):
        return n * self.rate

    def log_gn_batch(self, sys, pts, n):
        return np.full(len(np.atleast_2d(pts)), n * self.rate)

    def is_additive(self):
        return True

    def describe(self):
        return f"constant({self.rate})"


@dataclass
class Sum(Potential):
    """G + H pointwise."""

    left: Potential
    right: Potential

    def log_gn(self, sys, x, n):
        return self.left.log_gn(sys, x, n) + self.right.log_gn(sys, x, n)

    def log_gn_batch(self, sys, pts, n):
        return self.left.log_gn_batch(sys, pts, n) + self.right.log_gn_batch(sys, pts, n)

    def is_additive(self):
        return self.left.is_additive() and self.right.is_additive()

    def describe(self):
        return f"({self.left.describe()} + {self.right.describe()})"


@dataclass
class Scale(Potential):
    """c * G for c >= 0 (keeps sub-additivity)."""

    factor: float
    base: Potential

    def __post_init__(self):
        if self.factor < 0:
            raise ValueError("scale factor must be >= 0")

    def log_gn(self, sys, x, n):
        return self.factor * self.base.log_gn(sys, x, n)

    def log_gn_batch(self, sys, pts, n):
        return self.factor * self.base.log_gn_batch(sys, pts, n)

    def is_additive(self):
        return self.base.is_additive()

    def describe(self):
        return f"{self.factor}*{self.base.describe()}"


@dataclass
class Shift(Potential):
    """c + G in the pressure sense: log g_n shifted by n*c, so that the
    pressure moves by exactly c."""

    offset: float
    base: Potential

    def log_gn(self, sys, x, n):
        return self.base.log_gn(sys, x, n) + n * self.offset

    def log_gn_batch(self, sys, pts, n):
        return self.base.log_gn_batch(sys, pts, n) + n * self.offset

    def is_additive(self):
        return self.base.is_additive()

    def describe(self):
        return f"shift({self.offset}, {self.base.describe()})"


@dataclass
class CoboundaryTwist(Potential):
    """G + H o f - H for additive H generated by phi; telescopes to
    log g_n(x) + phi(f^n x) - phi(x)."""

    base: Potential
    phi: object
    name: str = "phi"

    def log_gn(self, sys, x, n):
        if n == 0:
            return 0.0
        x = np.atleast_2d(np.asarray(x, float))
        return float(self.log_gn_batch(sys, x, n)[0])

    def log_gn_batch(self, sys, pts, n):
        pts = np.atleast_2d(np.asarray(pts, float))
        if n == 0:
            return np.zeros(len(pts))
        cur = reduce_point(pts)
        for _ in range(n):
            cur = reduce_point(sys.lift_map(cur))
        head = np.asarray(self.phi(cur), float)
        tail = np.asarray(self.phi(reduce_point(pts)), float)
        return self.base.log_gn_batch(sys, pts, n) + head - tail

    def is_additive(self):
        return self.base.is_additive()

    def describe(self):
        return f"twist({self.base.describe()}, {self.name})"


# --- observable library -----------------------------------------------------


def constant_observable(c):
    c = float(c)

    def phi(x):
        x = np.atleast_2d(x)
        return np.full(len(x), c)

    phi.description = f"const({c})"
    return phi


def cos_first_coordinate():
    def phi(x):
        x = np.atleast_2d(np.asarray(x, float))
        return np.cos(2.0 * np.pi * x[:, 0])

    phi.description = "cos(2 pi x1)"
    return phi


def trig_observable(terms):
    """phi(x) = sum of amp * cos(2 pi k.x + phase) for (amp, kvec, phase) terms."""
    amps = np.asarray([t[0] for t in terms], float)
    waves = np.atleast_2d(np.asarray([t[1] for t in terms], float))
    phases = np.asarray([t[2] for t in terms], float)

    def phi(x):
        x = np.atleast_2d(np.asarray(x, float))
        angles = 2.0 * np.pi * (x @ waves.T) + phases
        return np.cos(angles) @ amps

    phi.description = f"trig({len(amps)} terms)"
    return phi


# --- sub-additivity audit ----------------------------------------------------


@dataclass
class SubadditivityReport:
    trials: int
    max_violation: float
    max_equality_defect: float | None
    passed: bool


def check_subadditivity(G, sys, trials=200, max_n=12, seed=0):
    """Sample (x, n, m) and report the worst defect of
    log g_{m+n}(x) <= log g_n(x) + log g_m(f^n x)."""
    if trials < 1 or max_n < 2:
        raise ValueError("need trials >= 1 and max_n >= 2")
    rng = np.random.default_rng(seed)
    worst = -np.inf
    eq_defect = 0.0 if G.is_additive() else None
    for _ in range(trials):
        x = rng.random(sys.dim)
        n = int(rng.integers(1, max_n))
        m = int(rng.integers(1, max_n - n + 1)) if max_n - n >= 1 else 1
        total = G.log_gn(sys, x, n + m)
        fx = x
        for _ in range(n):
            fx = reduce_point(sys.lift_map(fx))
        split = G.log_gn(sys, x, n) + G.log_gn(sys, fx, m)
        worst = max(worst, total - split)
        if eq_defect is not None:
            eq_defect = max(eq_defect, abs(total - split))
    return SubadditivityReport(
        trials=trials,
        max_violation=float(worst),
        max_equality_defect=eq_defect,
        passed=bool(worst <= SUBADD_TOL),
    )


# --- Lyapunov functional ------------------------------------------------------


@dataclass
class LyapunovEstimate:
    measure: object
    value: object  # float or the NEG_INFINITY sentinel
    stderr: float
    stages: list  # (n, stage mean) pairs
    exact: float | None = None  # analytic ground truth where available
    seed: int | None = None


def lyapunov_functional(G, sys, measure, stages=(2, 4, 8, 16), seed=0, samples=400):
    """Estimate G_*(mu) = lim (1/n) integral log g_n d mu for a registry measure."""
    stages = list(stages)
    if not stages or any(b <= a for a, b in zip(stages, stages[1:])):
        raise ValueError("stages must be nonempty and increasing")
    rng = np.random.default_rng(seed)
    stage_rows = []
    stderr = 0.0
    if measure.kind == "haar" or measure.sampler is not None:
        if measure.kind == "haar":
            pts = rng.random((samples, sys.dim))
        else:
            pts = measure.sampler(rng, samples)
        for n in stages:
            vals = G.log_gn_batch(sys, pts, n) / n
            stage_rows.append((n, float(np.mean(vals))))
            stderr = float(np.std(vals, ddof=1) / np.sqrt(samples))
    else:
        orbit_pts = np.atleast_2d(np.asarray(measure.points, float))
        period = len(orbit_pts)
        for n in stages:
            k = max(1, int(round(n / period))) * period  # multiple of the period
            vals = G.log_gn_batch(sys, orbit_pts, k) / k
            stage_rows.append((k, float(np.mean(vals))))
        stderr = 0.0
    value = stage_rows[-1][1]
    result = value if value > LYAPUNOV_FLOOR else NEG_INFINITY
    exact = None
    if isinstance(G, CocycleNorm) and isinstance(sys, LinearPHSystem):
        exact = G.exponent * float(np.log(sys.unstable_rate))
    elif isinstance(G, Constant):
        exact = G.rate
    return LyapunovEstimate(
        measure=measure,
        value=result,
        stderr=stderr,
        stages=stage_rows,
        exact=exact,
        seed=seed,
    )

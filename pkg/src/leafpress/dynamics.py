"""Torus diffeomorphisms with a dominated splitting, and their derivative cocycles.

Supported systems are affine integer-matrix maps on the d-torus (cat map,
cat x rotation) and small trigonometric perturbations of them.  Points are
plain numpy arrays with coordinates reduced to [0, 1); leafwise machinery
works on lifts to R^d and reduces only for map evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FrameNotReadyError, NoConvergenceError

TORUS_TOL = 1e-12

# Golden-mean rotation angle used by the built-in cat x rotation system.
GOLDEN_ROTATION = (np.sqrt(5.0) - 1.0) / 2.0

# Expansion rate of the [[2,1],[1,1]] cat map: largest root of x^2 - 3x + 1.
CAT_LAMBDA = (3.0 + np.sqrt(5.0)) / 2.0
LOG_CAT_LAMBDA = float(np.log(CAT_LAMBDA))


def reduce_point(coords):
    """Reduce coordinates mod 1 into [0, 1) (floor-based, idempotent)."""
    return np.asarray(coords, dtype=float) % 1.0


def torus_distance(p, q):
    """Euclidean distance on the torus (shortest representative per coordinate)."""
    delta = np.abs(np.asarray(p, float) - np.asarray(q, float)) % 1.0
    delta = np.minimum(delta, 1.0 - delta)
    return float(np.sqrt(np.sum(delta * delta, axis=-1)))


def points_equal(p, q, tol=TORUS_TOL):
    """Torus-point equality via distance, never coordinatewise comparison."""
    return torus_distance(p, q) < tol


@dataclass(frozen=True)
class TrigField:
    """Periodic vector field built from terms amp * sin(2*pi*(k . x) + phase).

    amps: (nterms, d) coefficient array; waves: (nterms, d) integer array;
    phases: (nterms,) array.  All coefficients dimensionless.
    """

    amps: np.ndarray
    waves: np.ndarray
    phases: np.ndarray

    @classmethod
    def from_terms(cls, terms):
        amps = np.atleast_2d(np.asarray([t[0] for t in terms], float))
        waves = np.atleast_2d(np.asarray([t[1] for t in terms], float))
        phases = np.asarray([t[2] for t in terms], float)
        return cls(amps=amps, waves=waves, phases=phases)

    def __call__(self, x):
        x = np.asarray(x, float)
        # Periodic in each coordinate, so lifts evaluate identically.
        angles = 2.0 * np.pi * (x @ self.waves.T) + self.phases
        return np.sin(angles) @ self.amps

    def jacobian(self, x):
        x = np.asarray(x, float)
        angles = 2.0 * np.pi * (x @ self.waves.T) + self.phases
        c = np.cos(angles)  # (..., nterms)
        # d/dx_j of term i = amp_i * cos(angle_i) * 2 pi k_{ij}
        return 2.0 * np.pi * np.einsum("...t,ta,tb->...ab", c, self.amps, self.waves)

    @property
    def sup_norm(self):
        return float(np.sum(np.linalg.norm(self.amps, axis=1)))

    @property
    def derivative_bound(self):
        return float(
            2.0
            * np.pi
            * np.sum(np.linalg.norm(self.amps, axis=1) * np.linalg.norm(self.waves, axis=1))
        )

    def to_dict(self):
        return {
            "amps": self.amps.tolist(),
            "waves": self.waves.tolist(),
            "phases": self.phases.tolist(),
        }


def _classify_splitting(matrix):
    """Eigen-split an integer matrix into stable/center/unstable real directions."""
    eigvals, eigvecs = np.linalg.eig(np.asarray(matrix, float))
    stable, center, unstable, rates = [], [], [], []
    for lam, vec in zip(eigvals, eigvecs.T):
        if abs(lam.imag) > 1e-10 or abs(vec.imag).max() > 1e-10:
            # Complex pairs only occur for rotation-like blocks: center.
            v = np.real(vec)
            if np.linalg.norm(v) < 1e-12:
                v = np.imag(vec)
            center.append(v / np.linalg.norm(v))
            continue
        v = np.real(vec)
        v = v / np.linalg.norm(v)
        mag = abs(lam.real)
        if mag > 1.0 + 1e-9:
            unstable.append(v)
            rates.append(float(mag))
        elif mag < 1.0 - 1e-9:
            stable.append(v)
        else:
            center.append(v)
    return stable, center, unstable, rates


@dataclass(frozen=True)
class LinearPHSystem:
    """Affine torus map x -> matrix @ x + shift (mod 1) with |det matrix| = 1."""

    matrix: np.ndarray
    shift: np.ndarray
    stable_basis: list = field(default_factory=list)
    center_basis: list = field(default_factory=list)
    unstable_basis: list = field(default_factory=list)
    unstable_eigenvalues: list = field(default_factory=list)

    @classmethod
    def build(cls, matrix, shift=None):
        matrix = np.asarray(matrix, float)
        d = matrix.shape[0]
        if matrix.shape != (d, d):
            raise ValueError("matrix must be square")
        if not np.allclose(matrix, np.round(matrix)):
            raise ValueError("matrix entries must be integers")
        det = round(float(np.linalg.det(matrix)))
        if abs(det) != 1:
            raise ValueError(f"matrix must be unimodular, got det={det}")
        if shift is None:
            shift = np.zeros(d)
        shift = np.asarray(shift, float)
        stable, center, unstable, rates = _classify_splitting(matrix)
        return cls(
            matrix=matrix,
            shift=shift,
            stable_basis=stable,
            center_basis=center,
            unstable_basis=unstable,
            unstable_eigenvalues=rates,
        )

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def magnitude(self):
        return 0.0

    @property
    def unstable_rate(self):
        if not self.unstable_eigenvalues:
            raise FrameNotReadyError("system has no unstable direction")
        return self.unstable_eigenvalues[0]

    @property
    def unstable_direction(self):
        if not self.unstable_basis:
            raise FrameNotReadyError("system has no unstable direction")
        return self.unstable_basis[0]

    def lift_map(self, x):
        """The map on the universal cover R^d (no reduction)."""
        return np.asarray(x, float) @ self.matrix.T + self.shift

    def jacobian(self, x):
        x = np.asarray(x, float)
        if x.ndim == 1:
            return self.matrix
        return np.broadcast_to(self.matrix, x.shape[:-1] + self.matrix.shape)

    def iterate_system(self, k):
        """The affine system realizing the k-th iterate of this map."""
        if k < 1:
            raise ValueError("k must be >= 1")
        mk = np.linalg.matrix_power(self.matrix.astype(np.int64), k).astype(float)
        shift = np.zeros(self.dim)
        acc = np.eye(self.dim)
        for _ in range(k):
            shift = shift + acc @ self.shift
            acc = acc @ self.matrix
        return LinearPHSystem.build(mk, shift)


@dataclass(frozen=True)
class PerturbedSystem:
    """x -> base(x) + magnitude * perturbation(x) (mod 1), magnitude small."""

    base: LinearPHSystem
    perturbation: TrigField
    magnitude: float

    def __post_init__(self):
        if self.magnitude < 0:
            raise ValueError("magnitude must be >= 0")
        if self.magnitude > 0 and self.magnitude > self.cone_threshold:
            raise NoConvergenceError(
                "perturbation magnitude exceeds the cone-preservation threshold",
                magnitude=self.magnitude,
                threshold=self.cone_threshold,
            )

    @property
    def cone_threshold(self):
        # Conservative cone-preservation condition, documented not derived:
        # magnitude * (1 + derivative bound) < (lambda - 1) / 4.
        lam = self.base.unstable_rate
        return (lam - 1.0) / 4.0 / (1.0 + self.perturbation.derivative_bound)

    @property
    def dim(self):
        return self.base.dim

    @property
    def matrix(self):
        return self.base.matrix

    @property
    def stable_basis(self):
        return self.base.stable_basis

    @property
    def center_basis(self):
        return self.base.center_basis

    @property
    def unstable_basis(self):
        return self.base.unstable_basis

    @property
    def unstable_rate(self):
        return self.base.unstable_rate

    @property
    def unstable_direction(self):
        return self.base.unstable_direction

    def lift_map(self, x):
        x = np.asarray(x, float)
        return self.base.lift_map(x) + self.magnitude * self.perturbation(x)

    def jacobian(self, x):
        return self.base.jacobian(x) + self.magnitude * self.perturbation.jacobian(x)

    def lift_preimage(self, x, tol=1e-13, max_iter=60):
        """Newton solve of lift_map(y) = x on the cover."""
        x = np.asarray(x, float)
        ainv = np.linalg.inv(self.base.matrix)
        y = (x - self.base.shift) @ ainv.T
        for _ in range(max_iter):
            res = self.lift_map(y) - x
            if np.max(np.abs(res)) < tol:
                return y
            y = y - np.linalg.solve(self.jacobian(y), res)
        raise NoConvergenceError("Newton preimage iteration did not converge")


def cat_map():
    """The [[2,1],[1,1]] hyperbolic automorphism of T^2 (trivial center)."""
    return LinearPHSystem.build([[2, 1], [1, 1]])


def cat_rotation(alpha=GOLDEN_ROTATION):
    """Cat map times rotation by alpha on T^3: the minimal 3-bundle example."""
    matrix = [[2, 1, 0], [1, 1, 0], [0, 0, 1]]
    return LinearPHSystem.build(matrix, shift=[0.0, 0.0, alpha])


def perturbed_cat_rotation(magnitude, terms=None, alpha=GOLDEN_ROTATION):
    if terms is None:
        terms = [
            ([0.5, 0.0, 0.0], [0, 1, 0], 0.0),
            ([0.0, 0.3, 0.2], [1, 0, 1], 1.0),
        ]
    return PerturbedSystem(
        base=cat_rotation(alpha), perturbation=TrigField.from_terms(terms), magnitude=magnitude
    )


def apply_map(sys, p):
    """One application of the map, reduced mod 1."""
    return reduce_point(sys.lift_map(reduce_point(p)))


def apply_iterate(sys, p, n):
    """n-fold composition; n = 0 is the identity."""
    if n < 0:
        raise ValueError("n must be >= 0")
    q = reduce_point(p)
    for _ in range(n):
        q = reduce_point(sys.lift_map(q))
    return q


def orbit(sys, p, n):
    """The points p, f(p), ..., f^(n-1)(p) as an (n, d) array."""
    pts = np.empty((n, np.asarray(p).shape[-1]))
    q = reduce_point(p)
    for i in range(n):
        pts[i] = q
        q = reduce_point(sys.lift_map(q))
    return pts


def unstable_frame(sys, p, depth=16):
    """Unit vector spanning E^u at p.

    Linear systems read it off the eigenbasis.  Perturbed systems push the
    linear unstable direction forward from a depth-step Newton preimage; the
    dominated splitting aligns the pushed vector with E^u geometrically fast.
    """
    if isinstance(sys, LinearPHSystem):
        return sys.unstable_direction
    try:
        y = reduce_point(p).astype(float)
        backward = [y]
        for _ in range(depth):
            y = reduce_point(sys.lift_preimage(y))
            backward.append(y)
    except NoConvergenceError as exc:
        raise FrameNotReadyError(
            "unstable frame unavailable: preimage iteration failed"
        ) from exc
    v = sys.unstable_direction.copy()
    for q in reversed(backward[1:]):
        v = sys.jacobian(q) @ v
        v = v / np.linalg.norm(v)
    return v


def unstable_cocycle_norm(sys, p, n, depth=16):
    """Norm of D f^n restricted to E^u along the orbit of p (product of steps)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if isinstance(sys, LinearPHSystem):
        lam = sys.unstable_rate
        out = 1.0
        for _ in range(n):
            out *= lam
        return out
    v = unstable_frame(sys, p, depth=depth)
    q = reduce_point(p)
    out = 1.0
    for _ in range(n):
        w = sys.jacobian(q) @ v
        step = float(np.linalg.norm(w))
        out *= step
        v = w / step
        q = reduce_point(sys.lift_map(q))
    return out


@dataclass(frozen=True)
class CocycleProduct:
    start: np.ndarray
    steps: int
    restricted_norm: float


def cocycle_product(sys, p, n):
    return CocycleProduct(start=reduce_point(p), steps=n, restricted_norm=unstable_cocycle_norm(sys, p, n))


@dataclass
class SplittingReport:
    samples: int
    bundle_norms: dict  # bundle -> (min, max) of one-step restricted norms
    passed: bool
    failures: list


def verify_partial_hyperbolicity(sys, samples=100, seed=0):
    """Sample the splitting inequalities ||Df v^s|| < ||Df v^c|| < ||Df v^u||,
    ||Df|E^s|| < 1 and ||Df^-1|E^u|| < 1 at random points.

    Failure is reported (passed=False), never raised.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    failures = []
    bundles = {
        "stable": list(sys.stable_basis),
        "center": list(sys.center_basis),
        "unstable": list(sys.unstable_basis),
    }
    if not bundles["unstable"]:
        failures.append("unstable bundle is trivial")
    norms = {name: [np.inf, -np.inf] for name in bundles}
    pts = rng.random((samples, sys.dim))
    for x in pts:
        jac = sys.jacobian(x)
        per_bundle = {}
        for name, vecs in bundles.items():
            if not vecs:
                continue
            vals = [float(np.linalg.norm(jac @ v)) for v in vecs]
            per_bundle[name] = vals
            lo, hi = norms[name]
            norms[name] = [min(lo, min(vals)), max(hi, max(vals))]
        s = max(per_bundle.get("stable", [0.0]), default=0.0)
        u = min(per_bundle.get("unstable", [np.inf]))
        c_vals = per_bundle.get("center", [])
        if per_bundle.get("stable") and max(per_bundle["stable"]) >= 1.0:
            failures.append("stable bundle not contracted")
        if per_bundle.get("unstable") and u <= 1.0:
            failures.append("unstable bundle not expanded")
        for c in c_vals:
            if not (s < c < u):
                failures.append("norm chain violated at a sample point")
        if not c_vals and per_bundle.get("stable") and per_bundle.get("unstable"):
            if not max(per_bundle["stable"]) < u:
                failures.append("norm chain violated at a sample point")
        if failures:
            break
    bundle_norms = {
        name: tuple(vals) for name, vals in norms.items() if vals[0] != np.inf
    }
    return SplittingReport(
        samples=samples,
        bundle_norms=bundle_norms,
        passed=not failures,
        failures=sorted(set(failures)),
    )

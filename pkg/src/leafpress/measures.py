"""Registry of invariant-measure surrogates with known unstable entropies.

Entropies are analytic inputs, never estimated: Haar volume on an affine
system carries the sum of unstable log-eigenvalues, periodic orbits carry
zero (atomic measures), empirical orbits carry no certified value and are
excluded from certified suprema.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import LinearPHSystem, apply_map, orbit, reduce_point, torus_distance

CYCLE_TOL = 1e-9


@dataclass
class MeasureEntry:
    kind: str  # haar | periodic | fiber | empirical
    hu_value: float | None
    hu_provenance: str  # analytic | assumed-zero | unavailable
    description: str
    points: np.ndarray | None = None  # periodic cycle or empirical orbit
    seed_point: np.ndarray | None = None
    length: int | None = None
    sampler: object | None = None  # (rng, k) -> (k, d) sample points

    @property
    def certified(self):
        return self.hu_provenance in ("analytic", "assumed-zero")


def haar_measure(sys):
    if isinstance(sys, LinearPHSystem):
        hu = float(np.sum(np.log(sys.unstable_eigenvalues)))
        return MeasureEntry(
            kind="haar",
            hu_value=hu,
            hu_provenance="analytic",
            description="Haar volume (unstable entropy = sum of unstable log-eigenvalues)",
        )
    return MeasureEntry(
        kind="haar",
        hu_value=None,
        hu_provenance="unavailable",
        description="Haar volume on a perturbed system (entropy not certified)",
    )


def periodic_orbit_measure(sys, point, period):
    """Uniform measure on a verified period-`period` cycle."""
    pts = orbit(sys, point, period)
    closure = apply_map(sys, pts[-1])
    if torus_distance(closure, pts[0]) > CYCLE_TOL:
        raise ValueError(
            f"points do not close up into a period-{period} cycle "
            f"(gap {torus_distance(closure, pts[0]):.2e})"
        )
    return MeasureEntry(
        kind="periodic",
        hu_value=0.0,
        hu_provenance="assumed-zero",
        description=f"periodic orbit of period {period}",
        points=pts,
    )


def fixed_point_measure(sys, point=None):
    if point is None:
        point = np.zeros(sys.dim)
    return periodic_orbit_measure(sys, point, 1)


def fiber_circle_measure(sys, base_point=None, period=1):
    """A periodic cycle of the hyperbolic block crossed with the center circle.

    For cat x rotation this is the ergodic invariant measure supported on the
    circle over a cat-map periodic point; its unstable entropy is zero (the
    conditionals on unstable leaves are atomic).
    """
    if base_point is None:
        base_point = np.zeros(sys.dim)
    base_point = reduce_point(base_point)
    pts = orbit(sys, base_point, period)
    closure = apply_map(sys, pts[-1])
    # Only the non-center block must close up; center coordinates rotate freely.
    gap = torus_distance(closure[:-1], pts[0][:-1])
    if gap > CYCLE_TOL:
        raise ValueError(f"toral factor does not close up (gap {gap:.2e})")
    cycle = pts

    def sampler(rng, k):
        idx = rng.integers(0, period, size=k)
        out = cycle[idx].copy()
        out[:, -1] = rng.random(k)  # uniform over the center circle
        return out

    return MeasureEntry(
        kind="fiber",
        hu_value=0.0,
        hu_provenance="assumed-zero",
        description=f"period-{period} toral cycle times the center circle",
        points=cycle,
        sampler=sampler,
    )


def empirical_orbit_measure(sys, seed_point, length):
    pts = orbit(sys, seed_point, length)
    return MeasureEntry(
        kind="empirical",
        hu_value=None,
        hu_provenance="unavailable",
        description=f"empirical orbit of length {length}",
        points=pts,
        seed_point=reduce_point(seed_point),
        length=length,
    )


def default_registry(sys):
    """Haar volume plus the zero-entropy measure over the origin.

    If the origin is fixed that is the point mass; otherwise (center
    rotation) it is the origin's toral fiber crossed with the center circle.
    """
    entries = [haar_measure(sys)]
    origin = np.zeros(sys.dim)
    if torus_distance(apply_map(sys, origin), origin) < CYCLE_TOL:
        entries.append(fixed_point_measure(sys, origin))
    else:
        entries.append(fiber_circle_measure(sys, origin))
    return entries

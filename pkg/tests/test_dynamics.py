import numpy as np
import pytest

from leafpress.dynamics import (
    CAT_LAMBDA,
    LOG_CAT_LAMBDA,
    LinearPHSystem,
    apply_iterate,
    apply_map,
    cat_map,
    cat_rotation,
    cocycle_product,
    orbit,
    perturbed_cat_rotation,
    reduce_point,
    torus_distance,
    unstable_cocycle_norm,
    unstable_frame,
    verify_partial_hyperbolicity,
)
from leafpress.errors import FrameNotReadyError, NoConvergenceError


def test_reduce_point_idempotent():
    p = np.array([1.7, -0.3, 2.0])
    q = reduce_point(p)
    assert np.all((q >= 0) & (q < 1))
    assert np.allclose(reduce_point(q), q)


def test_torus_distance_wraps():
    assert torus_distance(np.array([0.95, 0.0]), np.array([0.05, 0.0])) == pytest.approx(0.1)


def test_cat_map_eigenstructure():
    sys = cat_map()
    assert sys.unstable_rate == pytest.approx(CAT_LAMBDA)
    assert len(sys.center_basis) == 0
    assert round(float(np.linalg.det(sys.matrix))) in (-1, 1)


def test_cat_rotation_splitting():
    sys = cat_rotation()
    assert sys.dim == 3
    assert sys.unstable_rate == pytest.approx((3 + np.sqrt(5)) / 2)
    assert len(sys.center_basis) == 1
    # center direction is the rotation axis
    assert abs(sys.center_basis[0][2]) == pytest.approx(1.0)


def test_non_unimodular_rejected():
    with pytest.raises(ValueError):
        LinearPHSystem.build([[2, 0], [0, 1]])


def test_cocycle_multiplicativity_linear():
    sys = cat_rotation()
    x = np.array([0.2, 0.7, 0.1])
    n3 = unstable_cocycle_norm(sys, x, 3)
    n2 = unstable_cocycle_norm(sys, x, 2)
    n5 = unstable_cocycle_norm(sys, x, 5)
    assert n5 == pytest.approx(n3 * n2, rel=1e-12)
    assert np.log(n3) == pytest.approx(3 * LOG_CAT_LAMBDA)


def test_cocycle_submultiplicative_perturbed():
    sys = perturbed_cat_rotation(0.005)
    rng = np.random.default_rng(3)
    for _ in range(20):
        x = rng.random(3)
        n, m = 3, 2
        fx = apply_iterate(sys, x, n)
        total = unstable_cocycle_norm(sys, x, n + m)
        split = unstable_cocycle_norm(sys, x, n) * unstable_cocycle_norm(sys, fx, m)
        assert total <= split * (1 + 1e-9)


def test_cocycle_product_record():
    sys = cat_map()
    rec = cocycle_product(sys, np.array([0.1, 0.2]), 4)
    assert rec.steps == 4
    assert rec.restricted_norm == pytest.approx(CAT_LAMBDA**4)


def test_orbit_and_iterate_consistency():
    sys = cat_rotation()
    x = np.array([0.3, 0.4, 0.9])
    pts = orbit(sys, x, 5)
    assert np.allclose(pts[3], apply_iterate(sys, x, 3))
    assert np.allclose(pts[1], apply_map(sys, x))


def test_lift_preimage_inverts():
    sys = perturbed_cat_rotation(0.01)
    x = np.array([0.37, 0.81, 0.55])
    y = sys.lift_preimage(x)
    assert np.max(np.abs(sys.lift_map(y) - x)) < 1e-10


def test_magnitude_threshold_enforced():
    with pytest.raises(NoConvergenceError):
        perturbed_cat_rotation(10.0)


def test_unstable_frame_linear_and_perturbed():
    lin = cat_rotation()
    v = unstable_frame(lin, np.zeros(3))
    assert np.linalg.norm(v) == pytest.approx(1.0)
    pert = perturbed_cat_rotation(0.01)
    w = unstable_frame(pert, np.array([0.2, 0.3, 0.4]))
    assert np.linalg.norm(w) == pytest.approx(1.0)
    # perturbed frame stays close to the linear one at small magnitude
    assert min(np.linalg.norm(w - v), np.linalg.norm(w + v)) < 0.1


def test_frame_not_ready_without_unstable():
    sys = cat_rotation()
    trivial = LinearPHSystem(
        matrix=sys.matrix,
        shift=sys.shift,
        stable_basis=sys.stable_basis,
        center_basis=sys.center_basis,
        unstable_basis=[],
        unstable_eigenvalues=[],
    )
    with pytest.raises(FrameNotReadyError):
        trivial.unstable_direction


def test_verify_partial_hyperbolicity_passes():
    for sys in (cat_map(), cat_rotation(), perturbed_cat_rotation(0.01)):
        report = verify_partial_hyperbolicity(sys, samples=40, seed=1)
        assert report.passed, report

import numpy as np
import pytest

from leafpress.dynamics import LOG_CAT_LAMBDA, cat_rotation
from leafpress.errors import UnsupportedPropertyError
from leafpress.leaf import build_leaf_chart
from leafpress.measures import default_registry, fiber_circle_measure
from leafpress.potentials import (
    AdditiveBirkhoff,
    CocycleNorm,
    Constant,
    cos_first_coordinate,
)
from leafpress.variational import (
    check_properties,
    log_sum_inequality,
    power_rule_check,
    stage_limit_check,
    variational_certificate,
)


def test_log_sum_uniform_zero_attains():
    lhs, rhs, gibbs = log_sum_inequality([0.5, 0.5], [0.0, 0.0])
    assert lhs == pytest.approx(np.log(2))
    assert rhs == pytest.approx(np.log(2))
    assert np.allclose(gibbs, [0.5, 0.5])


def test_log_sum_atomic_convention():
    # 0 * log 0 = 0 by convention
    lhs, rhs, _ = log_sum_inequality([1.0, 0.0], [3.0, 0.0])
    assert lhs == pytest.approx(3.0)
    assert rhs == pytest.approx(np.log(np.exp(3.0) + 1.0))
    assert rhs > lhs


def test_log_sum_validation():
    with pytest.raises(ValueError):
        log_sum_inequality([0.7, 0.7], [0.0, 0.0])
    with pytest.raises(ValueError):
        log_sum_inequality([1.0], [0.0, 0.0])


def test_log_sum_random_battery():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        k = int(rng.integers(2, 12))
        p = rng.random(k)
        p /= p.sum()
        a = rng.normal(scale=3.0, size=k)
        lhs, rhs, gibbs = log_sum_inequality(p, a)
        assert lhs <= rhs + 1e-12
        glhs, grhs, _ = log_sum_inequality(gibbs, a)
        assert abs(glhs - grhs) <= 1e-12


@pytest.fixture(scope="module")
def setup3():
    sys = cat_rotation()
    chart = build_leaf_chart(sys, np.zeros(3), 0.1)
    return sys, chart


def test_certificate_constant_potential(setup3):
    sys, chart = setup3
    reg = default_registry(sys)
    rep = variational_certificate(sys, chart, Constant(0.25), reg, range(1, 8), [0.02])
    assert rep.verdict == "certified-equal"
    assert rep.best_sum == pytest.approx(LOG_CAT_LAMBDA + 0.25)
    assert rep.one_sided_ok


def test_certificate_small_registry_inequality_only(setup3):
    sys, chart = setup3
    reg = [fiber_circle_measure(sys)]  # zero entropy only: best sum is 0
    rep = variational_certificate(sys, chart, Constant(0.0), reg, range(1, 8), [0.02])
    assert rep.verdict == "inequality-only"
    assert rep.gap == pytest.approx(LOG_CAT_LAMBDA, abs=0.01)
    assert rep.one_sided_ok


def test_properties_exact_items(setup3):
    sys, chart = setup3
    H = AdditiveBirkhoff(cos_first_coordinate(), name="cos")
    rep = check_properties(
        sys, chart, CocycleNorm(1.0), H, c=0.5, p=0.5,
        n_values=(2, 3), eps_values=(0.05,), est_n_values=range(1, 8),
    )
    for item in range(1, 6):
        assert rep.items[item]["passed"], rep.items[item]
        assert rep.items[item]["defect"] <= 1e-9
    assert rep.items[6]["passed"], rep.items[6]
    assert rep.passed


def test_properties_need_additive_generator(setup3):
    sys, chart = setup3
    with pytest.raises(UnsupportedPropertyError):
        check_properties(
            sys, chart, Constant(0.0), CocycleNorm(1.0),
            n_values=(2,), eps_values=(0.05,),
        )


def test_power_rule_registry_exact(setup3):
    sys, chart = setup3
    rep = power_rule_check(
        sys, chart, Constant(0.0), 2,
        base_n_values=range(1, 8), iter_n_values=range(1, 6),
    )
    assert rep.hu_defect <= 1e-12
    assert rep.hu_iterate == pytest.approx(2 * LOG_CAT_LAMBDA)
    assert rep.defect <= 0.06
    assert rep.passed


def test_power_rule_bad_k(setup3):
    sys, chart = setup3
    with pytest.raises(ValueError):
        power_rule_check(sys, chart, Constant(0.0), 5)


def test_stage_limit_additive_flat(setup3):
    sys, chart = setup3
    rep = stage_limit_check(sys, chart, Constant(0.1), stages=(1, 2, 4))
    # additive potential: every stage equals the sub-additive estimate
    for v in rep.stage_estimates:
        assert v == pytest.approx(rep.subadditive_estimate, abs=1e-9)
    assert rep.passed


def test_stage_limit_requires_doubling(setup3):
    sys, chart = setup3
    with pytest.raises(ValueError):
        stage_limit_check(sys, chart, Constant(0.0), stages=(1, 3, 5))

import math

import numpy as np
import pytest

from leafpress.cli import _oracle_battery, _random_instance
from leafpress.dynamics import CAT_LAMBDA, LOG_CAT_LAMBDA, cat_rotation
from leafpress.errors import (
    JoinSizeError,
    OracleRefusalError,
    UnderResolvedError,
    UnsupportedStructureError,
)
from leafpress.leaf import BowenDistanceEvaluator, build_leaf_chart, sample_leaf
from leafpress.potentials import CocycleNorm, Constant
from leafpress.pressure import (
    ball_sup_weights,
    brute_force_oracle,
    build_conflicts,
    build_pressure_table,
    conflicts_from_positions,
    cover_pressure_report,
    cover_pressure_small,
    estimate_pressure,
    finite_stage_row,
    greedy_max_separated,
    max_weight_separated_dp,
    min_weight_spanning_dp,
    required_sample_size,
)


class FakeSample:
    def __init__(self, params):
        self.params = np.asarray(params, float)


def tiny_structure(eps=1.0):
    # five points on a line, one expansion step of rate 2
    params = np.array([0.0, 0.4, 0.9, 2.0, 2.2])
    positions = np.vstack([params, 2.0 * params])
    return conflicts_from_positions(FakeSample(params), positions, eps)


def test_conflict_ranges_tiny():
    cs = tiny_structure(eps=1.0)
    # conflicts are decided by the expanded row (distances doubled);
    # the pair at distance exactly eps counts as separated
    assert list(cs.conflict_lo) == [0, 0, 2, 3, 3]
    assert list(cs.conflict_hi) == [1, 1, 2, 4, 4]
    assert cs.distance(0, 1) == pytest.approx(0.8)


def test_nonmonotone_positions_rejected():
    params = np.array([0.0, 1.0, 2.0])
    bad = np.array([[0.0, 2.0, 1.0]])
    with pytest.raises(UnsupportedStructureError):
        conflicts_from_positions(FakeSample(params), bad, 0.5)


def test_dp_beats_or_matches_greedy():
    cs = tiny_structure(eps=1.0)
    lw = np.array([0.0, 2.0, 1.0, 0.5, 0.4])
    dp = max_weight_separated_dp(cs, lw)
    greedy = greedy_max_separated(cs, lw)
    assert dp.log_total >= greedy.log_total - 1e-12
    # selected set is genuinely separated
    for a, b in zip(dp.indices, dp.indices[1:]):
        assert cs.distance(a, b) >= 1.0 - 1e-9


def test_spanning_covers_everything():
    cs = tiny_structure(eps=1.0)
    lw = np.zeros(5)
    sol = min_weight_spanning_dp(cs, ball_sup_weights(cs, lw))
    covered = np.zeros(5, dtype=bool)
    for c in sol.indices:
        covered[cs.cover_lo[c] : cs.cover_hi[c] + 1] = True
    assert covered.all()
    assert sol.log_total == pytest.approx(math.log(len(sol.indices)))


def test_brute_force_refuses_large():
    params = np.linspace(0, 1, 25)
    cs = conflicts_from_positions(FakeSample(params), params[None, :], 0.1)
    with pytest.raises(OracleRefusalError):
        brute_force_oracle(cs, np.zeros(25))


def test_dp_matches_brute_small_battery():
    # the acceptance suite runs the full >= 200-instance battery
    assert _oracle_battery(instances=40, max_m=12, seed=7) <= 1e-9


def test_random_instance_roles():
    rng = np.random.default_rng(11)
    cs, lw = _random_instance(rng, 12)
    greedy = greedy_max_separated(cs, lw)
    pack = max_weight_separated_dp(cs, lw)
    span = min_weight_spanning_dp(cs, ball_sup_weights(cs, lw))
    assert span.log_total <= greedy.log_total + 1e-9 <= pack.log_total + 2e-9
    assert greedy.spanning


@pytest.fixture(scope="module")
def setup3():
    sys = cat_rotation()
    chart = build_leaf_chart(sys, np.zeros(3), 0.1)
    return sys, chart


def test_density_rule_refusal(setup3):
    sys, chart = setup3
    ev = BowenDistanceEvaluator(sys, chart, depth=4)
    sample = sample_leaf(chart, 50)  # far below the density requirement
    with pytest.raises(UnderResolvedError) as err:
        build_conflicts(ev, sample, 0.01)
    assert err.value.reason == "under-resolved"


def test_required_sample_size_monotone(setup3):
    sys, chart = setup3
    m1 = required_sample_size(sys, 0.1, 4, 0.02)
    assert m1 > required_sample_size(sys, 0.1, 3, 0.02)
    assert m1 > required_sample_size(sys, 0.1, 4, 0.04)


def test_row_bracket_and_counts(setup3):
    sys, chart = setup3
    row = finite_stage_row(sys, chart, Constant(0.0), 3, 0.02)
    assert row.log_spanning <= row.log_greedy <= row.log_packing + 1e-12
    # zero potential: log totals are log counts
    assert row.log_packing == pytest.approx(math.log(row.packing_count))
    assert row.log_spanning == pytest.approx(math.log(row.spanning_count))


def test_estimate_under_resolved_flag(setup3):
    sys, chart = setup3
    table = build_pressure_table(sys, chart, Constant(0.0), [1, 2], [0.04])
    rep = estimate_pressure(table)
    assert not rep.ok
    assert rep.estimate is None


def test_estimate_matches_entropy(setup3):
    sys, chart = setup3
    table = build_pressure_table(sys, chart, Constant(0.0), range(1, 8), [0.02])
    rep = estimate_pressure(table)
    assert rep.ok
    assert rep.estimate == pytest.approx(LOG_CAT_LAMBDA, abs=0.01)


def test_cover_pressure_tiny_counts(setup3):
    sys, chart = setup3
    cover = [(-0.1, 0.005), (-0.005, 0.1)]
    # n = 1: two overlapping intervals, zero potential -> log 2
    val = cover_pressure_small(sys, chart, Constant(0.0), cover, 1)
    assert val == pytest.approx(math.log(2), abs=1e-9)


def test_cover_pressure_subadditive(setup3):
    sys, chart = setup3
    cover = [(-0.1, -0.02), (-0.04, 0.04), (0.02, 0.1)]
    rep = cover_pressure_report(sys, chart, CocycleNorm(0.5), cover, 5)
    assert rep.max_defect <= 1e-9
    assert rep.fekete_bound >= min(rep.values[n] / n for n in rep.values) - 1e-12


def test_cover_pressure_join_cap(setup3):
    sys, chart = setup3
    cover = [(-0.1, -0.049), (-0.051, 0.001), (-0.001, 0.051), (0.049, 0.1)]
    with pytest.raises(JoinSizeError):
        cover_pressure_small(sys, chart, Constant(0.0), cover, 12)


def test_cover_pressure_rejects_graph_chart():
    from leafpress.dynamics import perturbed_cat_rotation

    sys = perturbed_cat_rotation(0.01)
    chart = build_leaf_chart(sys, np.zeros(3), 0.1)
    with pytest.raises(UnsupportedStructureError):
        cover_pressure_small(sys, chart, Constant(0.0), [(-0.1, 0.1)], 2)


def test_q_at_half_eps_dominates_p(setup3):
    sys, chart = setup3
    for n in (2, 3, 4):
        row_p = finite_stage_row(sys, chart, Constant(0.0), n, 0.02)
        row_q = finite_stage_row(sys, chart, Constant(0.0), n, 0.01)
        assert row_q.log_spanning >= row_p.log_packing - 1e-9

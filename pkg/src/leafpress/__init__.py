"""leafpress: unstable topological pressure of partially hyperbolic torus
maps under sub-additive potential sequences.

Pipeline: define a system (dynamics), chart a local unstable leaf (leaf),
pick a potential sequence (potentials), compute finite-stage packing and
covering pressures on the discretized leaf (pressure), and certify the
variational principle against a registry of measures with analytic
entropies (measures, variational).
"""

from .config import RunConfig, build_chart, build_potential, build_system, load_config
from .dynamics import (
    CAT_LAMBDA,
    LOG_CAT_LAMBDA,
    LinearPHSystem,
    PerturbedSystem,
    cat_map,
    cat_rotation,
    perturbed_cat_rotation,
    verify_partial_hyperbolicity,
)
from .errors import LeafpressError
from .leaf import (
    BowenDistanceEvaluator,
    LeafChart,
    build_leaf_chart,
    estimate_comparability_constant,
    graph_transform_refine,
    sample_leaf,
)
from .measures import (
    MeasureEntry,
    default_registry,
    empirical_orbit_measure,
    fiber_circle_measure,
    fixed_point_measure,
    haar_measure,
    periodic_orbit_measure,
)
from .potentials import (
    AdditiveBirkhoff,
    CoboundaryTwist,
    CocycleNorm,
    Constant,
    Potential,
    Scale,
    Shift,
    Sum,
    check_subadditivity,
    lyapunov_functional,
)
from .pressure import (
    ConflictStructure,
    PressureTable,
    brute_force_oracle,
    build_conflicts,
    build_pressure_table,
    cover_pressure_report,
    cover_pressure_small,
    estimate_pressure,
    finite_stage_row,
    greedy_max_separated,
    max_weight_separated_dp,
    min_weight_spanning_dp,
    pressure_estimate,
    required_sample_size,
)
from .presets import load_preset, preset_names
from .variational import (
    check_properties,
    log_sum_inequality,
    power_rule_check,
    stage_limit_check,
    variational_certificate,
)

__version__ = "0.1.0"

"""
Services Package

Numerical services, one per concern, plus the trial pool and the results store.
"""

# Gauges
from app.services.gauge_service import (
    GaugeFunction,
    PowerGauge,
    TableGauge,
    TruncatedGauge,
    gauge_from_spec,
    validate_gauge,
    regularize_gauge,
    truncate_gauge,
    finiteness_test,
)

# Critical size
from app.services.mh_service import power_gauge_mh, solve_mh, mh, doubling_ratio, sandwich_mh

# Measures
from app.services.measure_service import (
    DiscreteMeasure,
    CubeMeasure,
    CantorMeasure,
    DensityMeasure,
    build_cantor,
    ball_mass,
    frostman_measure,
    discretize_measure,
    growth_constant,
    measure_from_json,
)

# Riesz transforms
from app.services.riesz_service import (
    RieszContext,
    truncated_transform,
    maximal_transform,
    modified_transform,
    symmetrized_pair_sum,
)

# Operators and Wolff potentials
from app.services.operator_service import (
    assemble_operator,
    operator_norm,
    operator_norm_sup,
    wolff_report,
    weak_type_profile,
)

# Content
from app.services.content_service import (
    DyadicCellSet,
    covering_upper_bound,
    frostman_lower_bound,
    content_bracket,
    superlevel_cells,
)

# Capacity
from app.services.capacity_service import (
    gamma_functional_from_measure,
    gamma_functional_from_content,
    riesz_energy_comparison,
    nonlinear_capacity_functional,
)

# Experiments
from app.services.experiment_service import (
    RandomCantorRealization,
    random_cantor_build,
    check_realization,
    cartan_lower_experiment,
    cartan_upper_experiment,
    large_s_experiment,
    one_point_content,
    bounded_regime_trend,
)

# Plumbing
from app.services.trial_service import TrialWorker, trial_rng
from app.services.results_service import ResultStore

__all__ = [
    # Gauges
    "GaugeFunction",
    "PowerGauge",
    "TableGauge",
    "TruncatedGauge",
    "gauge_from_spec",
    "validate_gauge",
    "regularize_gauge",
    "truncate_gauge",
    "finiteness_test",
    # Critical size
    "power_gauge_mh",
    "solve_mh",
    "mh",
    "doubling_ratio",
    "sandwich_mh",
    # Measures
    "DiscreteMeasure",
    "CubeMeasure",
    "CantorMeasure",
    "DensityMeasure",
    "build_cantor",
    "ball_mass",
    "frostman_measure",
    "discretize_measure",
    "growth_constant",
    "measure_from_json",
    # Riesz transforms
    "RieszContext",
    "truncated_transform",
    "maximal_transform",
    "modified_transform",
    "symmetrized_pair_sum",
    # Operators
    "assemble_operator",
    "operator_norm",
    "operator_norm_sup",
    "wolff_report",
    "weak_type_profile",
    # Content
    "DyadicCellSet",
    "covering_upper_bound",
    "frostman_lower_bound",
    "content_bracket",
    "superlevel_cells",
    # Capacity
    "gamma_functional_from_measure",
    "gamma_functional_from_content",
    "riesz_energy_comparison",
    "nonlinear_capacity_functional",
    # Experiments
    "RandomCantorRealization",
    "random_cantor_build",
    "check_realization",
    "cartan_lower_experiment",
    "cartan_upper_experiment",
    "large_s_experiment",
    "one_point_content",
    "bounded_regime_trend",
    # Plumbing
    "TrialWorker",
    "trial_rng",
    "ResultStore",
]

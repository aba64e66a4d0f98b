"""Substructure VARX damage localization for shear-building chain models."""

from .damage_analysis import (
    DamageIndicators,
    DamageReport,
    Element,
    analyze,
    calibrate_threshold,
    damage_indicators,
    estimate_severity,
    localize,
    stiffness_transform,
)
from .experiment_harness import emit_report, paper_suite, parse_report, run_scenario, run_suite
from .simulator import (
    DisplacementRecord,
    ForceRecord,
    SimConfig,
    extract_substructure_signals,
    generate_excitation,
    simulate,
)
from .structure_model import (
    ChainModel,
    SubstructureSpec,
    VarxModel,
    apply_damage,
    assemble_matrices,
    build_chain,
    ground_truth_varx,
    max_frequency_bound,
)
from .varx_estimation import (
    EstimationDiagnostics,
    RegressionProblem,
    assemble_regression,
    estimate_varx,
    mls_estimate,
    predict_one_step,
    residual_stats,
)

__version__ = "0.1.0"

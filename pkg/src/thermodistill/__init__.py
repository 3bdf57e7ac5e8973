"""Optimal thermodynamic distillation: exact single-shot errors and
dissipation, second-order asymptotics, and the classic protocols built
from them (work extraction, erasure, thermodynamically-free encoding)."""

from .model import (
    Ensemble,
    IncoherentState,
    PureState,
    Spectrum,
    Subsystem,
    TargetSpec,
    gibbs_weights,
    incommensurability_heuristic,
    target_from_hamiltonian,
)
from .moments import (
    MomentSummary,
    ensemble_moments,
    rel_entropy,
    rel_entropy_skewness,
    rel_entropy_variance,
    subsystem_moments,
    thermal_variance_heat_capacity_check,
)
from .atoms import (
    AtomBudgetError,
    OrderedAtoms,
    build_atoms,
    chi,
    chi_sandwich_check,
    top_mass,
)
from .majorization import (
    DistillationProblem,
    FinalStateSummary,
    epsilon_post_majorizes,
    exact_error,
    majorizes,
    min_epsilon_flat_target,
    optimal_final_state_profile,
)
from .asymptotics import (
    BERRY_ESSEEN_C_LOWER,
    BERRY_ESSEEN_C_UPPER,
    AsymptoticReport,
    Regime,
    asymptotic_report,
    classify_regime,
    dissipation_asymptotic,
    dissipation_coefficient,
    dissipation_from_gap,
    epsilon_asymptotic,
    epsilon_berry_esseen_bound,
    std_normal_cdf,
    std_normal_quantile,
)
from .purestate import (
    DEFAULT_MC_SEED,
    HyperplaneGeometry,
    TypeClassDistribution,
    asymptotic_error_pure,
    dephase_to_types,
    dissipation_lower_bound_pure,
    exact_error_pure,
    mc_hyperplane_probability,
    pure_final_state_profile,
    pure_moments,
)
from .protocols import (
    EncodingResult,
    ErasureResult,
    WorkExtractionResult,
    battery,
    encoding_capacity,
    encoding_error_at,
    erasure_cost,
    erasure_cost_exact,
    erasure_problem,
    hypothesis_testing_rel_entropy,
    hypothesis_testing_rel_entropy_product,
    hypothesis_testing_second_order,
    work_extraction_error,
    work_extraction_problem,
    work_extraction_pure,
    work_for_epsilon,
    work_pure_for_epsilon,
)
from .report import DistillationReport, distillation_report

__version__ = "0.1.0"

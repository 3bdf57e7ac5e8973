"""One-call summary of a distillation problem: exact numbers next to
their closed-form counterparts."""

from __future__ import annotations

from dataclasses import dataclass

from .asymptotics import (
    Regime,
    classify_regime,
    dissipation_from_gap,
    epsilon_asymptotic,
    epsilon_berry_esseen_bound,
)
from .majorization import (
    DistillationProblem,
    FinalStateSummary,
    optimal_final_state_profile,
)
from .moments import MomentSummary, ensemble_moments

__all__ = ["DistillationReport", "distillation_report"]


@dataclass(frozen=True)
class DistillationReport:
    """Exact error, Gaussian error, Berry-Esseen bound, exact and Gaussian
    dissipation, and the moment summary of one distillation problem.

    The Gaussian dissipation law is proven only for identical incoherent
    copies; ``dissipation_conjectured`` marks every other ensemble.
    """

    moments: MomentSummary
    epsilon_exact: float
    epsilon_asymptotic: float
    epsilon_upper_bound: float
    dissipated_exact: float
    dissipated_asymptotic: float
    regime: Regime
    final_state: FinalStateSummary
    dissipation_conjectured: bool

    @property
    def x(self) -> float:
        return self.moments.x


def distillation_report(prob: DistillationProblem, *, budget: int | None = None) -> DistillationReport:
    m = ensemble_moments(prob.ensemble, prob.target)
    profile = optimal_final_state_profile(prob, budget=budget)
    if m.sigma_f > 0.0:
        diss_asym = dissipation_from_gap(m.delta_f, m.sigma_f)
    else:
        diss_asym = 0.0
    conjectured = (not prob.ensemble.is_identical_copies) or prob.has_pure_groups
    return DistillationReport(
        moments=m,
        epsilon_exact=profile.epsilon,
        epsilon_asymptotic=epsilon_asymptotic(m),
        epsilon_upper_bound=epsilon_berry_esseen_bound(m),
        dissipated_exact=profile.dissipated,
        dissipated_asymptotic=diss_asym,
        regime=classify_regime(m),
        final_state=profile,
        dissipation_conjectured=conjectured,
    )

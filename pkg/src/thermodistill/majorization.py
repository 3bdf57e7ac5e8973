"""Majorization predicates, single-shot optimal error and exact dissipation.

The existence of a free thermal transformation taking an ensemble into a
sharp target state with infidelity eps reduces, in the embedded picture,
to approximate majorization of flat states.  For a flat target the
minimal error is one minus a top partial sum of the ordered embedded
initial distribution, i.e. one minus a Lorenz-curve value of the atoms at
the Gibbs-mass abscissa given by the target's Gibbs weight.

The optimal final state is flat at (1-eps)/K on the top block and equal
to the ordered initial tail beyond it (the minimal-entropy saturator);
its entropy gives the exact dissipated free energy.  The second-order
variant drops the (1-eps)log(1-eps) term, which does not scale with N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .atoms import (
    OrderedAtoms,
    build_atoms,
    mass_at_log_abscissa,
    plog_at_log_abscissa,
)
from .model import Ensemble, PureState, TargetSpec
from .moments import ensemble_moments

__all__ = [
    "DistillationProblem",
    "FinalStateSummary",
    "majorizes",
    "min_epsilon_flat_target",
    "exact_error",
    "optimal_final_state_profile",
    "final_state_profile_from_atoms",
    "epsilon_post_majorizes",
]

_GENERAL_TARGET_MAX_DIM = 1000


@dataclass(frozen=True)
class DistillationProblem:
    """An ensemble to be distilled into a sharp target state."""

    ensemble: Ensemble
    target: TargetSpec

    @property
    def has_pure_groups(self) -> bool:
        return any(isinstance(sub.state, PureState) for sub, _ in self.ensemble.groups)


def majorizes(p, q, tol: float = 1e-12) -> bool:
    """True iff every prefix sum of sorted(p) dominates sorted(q) (zero-padded)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    d = max(p.size, q.size)
    p = np.pad(np.sort(p)[::-1], (0, d - p.size))
    q = np.pad(np.sort(q)[::-1], (0, d - q.size))
    return bool(np.all(np.cumsum(p) - np.cumsum(q) >= -tol))


def _interpolated_prefix(sorted_desc: np.ndarray, x: float) -> float:
    """sum_{i<=x} of a sorted vector with the fractional-index convention."""
    if x <= 0:
        return 0.0
    n = sorted_desc.size
    if x >= n:
        return float(math.fsum(sorted_desc))
    n0 = int(math.floor(x))
    head = math.fsum(sorted_desc[:n0])
    return head + (x - n0) * float(sorted_desc[n0])


def min_epsilon_flat_target(p, log_l: float) -> float:
    """Minimal infidelity for majorizing a flat state of entropy ``log_l``.

    Equals one minus the (interpolated) sum of the top exp(log_l) entries
    of p.
    """
    p_sorted = np.sort(np.asarray(p, dtype=float))[::-1]
    val = _interpolated_prefix(p_sorted, math.exp(log_l))
    return min(1.0, max(0.0, 1.0 - val))


def exact_error(prob: DistillationProblem, *, atoms: OrderedAtoms | None = None,
                budget: int | None = None) -> float:
    """Exact optimal transformation error of a distillation problem.

    One minus the atoms' Lorenz curve at the target's Gibbs weight.
    Ensembles containing identical pure copies are handled through their
    dephased type classes, which is exact for incoherent targets.
    """
    oa = atoms if atoms is not None else _build(prob.ensemble, budget)
    mass = mass_at_log_abscissa(oa, prob.target.log_gibbs_weight)
    return min(1.0, max(0.0, 1.0 - mass))


def _build(ensemble: Ensemble, budget: int | None) -> OrderedAtoms:
    if budget is None:
        return build_atoms(ensemble)
    return build_atoms(ensemble, budget=budget)


@dataclass(frozen=True)
class FinalStateSummary:
    """Profile of the dissipation-optimal final state.

    ``dissipated`` is the exact free energy lost by the optimal process
    (top block flat at (1-eps)/K, tail untouched, boxes uniformized);
    ``dissipated_second_order`` drops the non-extensive
    -(1-eps)log(1-eps)/beta term.  For dephased pure inputs the box
    uniformization cannot be completed, so the same number is only a
    lower bound on the true dissipation (``dissipation_is_lower_bound``),
    and ``dephasing_entropy`` reports the entropy of the type-class
    distribution that separates the pure input from its dephased proxy.
    ``uniformization_correction_bound`` bounds the entropy gained by
    uniformizing the boundary embedding boxes; it vanishes exponentially
    in N for identical-copy ensembles.
    """

    epsilon: float
    log_k: float
    entropy_final: float
    dissipated: float
    dissipated_second_order: float
    uniformization_correction_bound: float
    dissipation_is_lower_bound: bool = False
    dephasing_entropy: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.epsilon <= 1.0):
            raise ValueError("epsilon out of [0, 1]")
        if not math.isfinite(self.dissipated):
            raise ValueError("dissipated free energy must be finite")


def _uniformization_bound(oa: OrderedAtoms) -> float:
    # One partially filled box per class boundary; each bounded by the
    # class's largest box mass times that box's log-dimension at the
    # smallest integer embedding scale.
    log_box_prob = oa.log_ratio + oa.log_box_gamma
    log_box_dim = np.maximum(oa.log_box_gamma + oa.log_dim_floor, 0.0)
    return float(np.sum(np.exp(log_box_prob) * log_box_dim))


def final_state_profile_from_atoms(oa: OrderedAtoms, log_abscissa: float, beta: float,
                                   *, is_lower_bound: bool = False,
                                   dephasing_entropy: float = 0.0) -> FinalStateSummary:
    """Final-state profile at a Lorenz cut ``exp(log_abscissa)`` of Gibbs mass."""
    mass = mass_at_log_abscissa(oa, log_abscissa)
    eps = min(1.0, max(0.0, 1.0 - mass))
    one_minus = 1.0 - eps
    r_top = plog_at_log_abscissa(oa, log_abscissa)
    ent_term = 0.0 if one_minus <= 0.0 else -one_minus * math.log(one_minus)

    beta_diss_2nd = one_minus * (oa.log_dim + log_abscissa) \
        + (r_top - one_minus * oa.log_dim)
    beta_diss = ent_term + beta_diss_2nd

    # Entropy of the final embedded state via the explicit tail sum.
    log_k = 2.0 * oa.log_dim + log_abscissa
    r_all = plog_at_log_abscissa(oa, math.inf)
    tail_plogp = (r_all - r_top) - eps * oa.log_dim
    entropy_final = ent_term + one_minus * log_k - tail_plogp + eps * oa.log_dim

    return FinalStateSummary(
        epsilon=eps,
        log_k=log_k,
        entropy_final=entropy_final,
        dissipated=beta_diss / beta,
        dissipated_second_order=beta_diss_2nd / beta,
        uniformization_correction_bound=_uniformization_bound(oa),
        dissipation_is_lower_bound=is_lower_bound,
        dephasing_entropy=dephasing_entropy,
    )


def optimal_final_state_profile(prob: DistillationProblem, *,
                                atoms: OrderedAtoms | None = None,
                                budget: int | None = None) -> FinalStateSummary:
    """Exact error and dissipated free energy of the optimal process."""
    oa = atoms if atoms is not None else _build(prob.ensemble, budget)
    dephasing_entropy = 0.0
    if prob.has_pure_groups:
        lp = oa.log_prob
        dephasing_entropy = -math.fsum(np.exp(lp) * lp)
    return final_state_profile_from_atoms(
        oa, prob.target.log_gibbs_weight, prob.ensemble.beta,
        is_lower_bound=prob.has_pure_groups,
        dephasing_entropy=dephasing_entropy,
    )


def _is_flat(q: np.ndarray, tol: float = 1e-12) -> bool:
    nz = q[q > 0]
    return nz.size == 0 or (nz.max() - nz.min()) <= tol * nz.max()


def _max_fidelity_under_majorization(p: np.ndarray, q: np.ndarray) -> float:
    """max F(q, r) over r majorized by p, for general q on small dimensions.

    Concave program: maximize sum_i sqrt(q_i r_i) over r aligned with
    sorted q, subject to prefix sums of r bounded by those of sorted p.
    """
    import cvxpy as cp

    d = p.size
    p_sorted = np.sort(p)[::-1]
    q_sorted = np.sort(q)[::-1]
    r = cp.Variable(d, nonneg=True)
    prefix = np.cumsum(p_sorted)
    constraints = [cp.sum(r) == 1.0, r[:-1] >= r[1:],
                   cp.cumsum(r)[:-1] <= prefix[:-1]]
    objective = cp.Maximize(cp.sum(cp.multiply(np.sqrt(q_sorted), cp.sqrt(r))))
    problem = cp.Problem(objective, constraints)
    problem.solve()
    if r.value is None:
        raise RuntimeError(f"fidelity optimization failed: status {problem.status}")
    return float(objective.value) ** 2


def epsilon_post_majorizes(p, q, eps: float, tol: float = 1e-9) -> bool:
    """True iff p majorizes some r within infidelity ``eps`` of q.

    Flat targets use the exact closed form at any size; general targets
    go through a concave fidelity maximization and are limited to
    dimension 1000.
    """
    if eps >= 1.0:
        return True
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    d = max(p.size, q.size)
    p = np.pad(p, (0, d - p.size))
    q = np.pad(q, (0, d - q.size))
    if _is_flat(q):
        support = int(np.count_nonzero(q > 0))
        min_eps = min_epsilon_flat_target(p, math.log(support))
        return min_eps <= eps + tol
    if d > _GENERAL_TARGET_MAX_DIM:
        raise ValueError(
            f"general targets are unsupported beyond dimension {_GENERAL_TARGET_MAX_DIM}; "
            "only flat targets have a scalable path")
    fid = _max_fidelity_under_majorization(p, q)
    return 1.0 - fid <= eps + tol

"""Thermodynamic protocols built on the distillation engine.

Work extraction, information erasure and thermodynamically-free encoding
are all distillation problems once a two-level battery with the right
energy splitting is appended; each also has a Gaussian closed form.  The
classical hypothesis-testing relative entropy (the optimal-test exponent)
closes the loop: it is exactly the inverse Lorenz curve of the atoms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .asymptotics import std_normal_cdf, std_normal_quantile
from .atoms import OrderedAtoms, build_atoms, log_abscissa_at_mass
from .majorization import (
    DistillationProblem,
    exact_error,
    optimal_final_state_profile,
)
from .model import Ensemble, IncoherentState, PureState, Spectrum, Subsystem, TargetSpec
from .moments import ensemble_moments
from .purestate import exact_error_pure, pure_moments

__all__ = [
    "WorkExtractionResult",
    "ErasureResult",
    "EncodingResult",
    "battery",
    "work_extraction_problem",
    "work_extraction_error",
    "work_for_epsilon",
    "work_extraction_pure",
    "work_pure_for_epsilon",
    "erasure_problem",
    "erasure_cost",
    "erasure_cost_exact",
    "encoding_capacity",
    "encoding_error_at",
    "hypothesis_testing_rel_entropy",
    "hypothesis_testing_rel_entropy_product",
    "hypothesis_testing_second_order",
]


# ---------------------------------------------------------------------------
# Work extraction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WorkExtractionResult:
    """Extracted work, exact and Gaussian errors, and the free energy of
    the actual final battery state (target-state value alongside)."""

    w: float
    epsilon_exact: float
    epsilon_asymptotic: float
    f_bat: float
    f_bat_target: float


def battery(w: float, beta: float, excited: bool = False) -> Subsystem:
    """Two-level battery with splitting ``w``, in its ground or excited state."""
    populations = [0.0, 1.0] if excited else [1.0, 0.0]
    return Subsystem(Spectrum(np.array([0.0, w]), beta), IncoherentState(populations))


def work_extraction_problem(e: Ensemble, w: float) -> DistillationProblem:
    """Append a ground-state battery and target its excited state."""
    beta = e.beta
    bat = battery(w, beta, excited=False)
    target = TargetSpec(float(bat.spectrum.log_gibbs[1]))
    return DistillationProblem(e.extended(Ensemble.copies(bat, 1)), target)


def work_extraction_error(e: Ensemble, w: float, *, budget: int | None = None) -> WorkExtractionResult:
    """Quality of extracting ``w`` from an incoherent ensemble.

    The exact error comes from the distillation engine; the Gaussian form
    is Phi((w - F)/sigma_f).  ``f_bat`` is the initial total free energy
    minus the exact dissipation of the optimal process.
    """
    prob = work_extraction_problem(e, w)
    m = ensemble_moments(e)
    beta = e.beta
    f_init_total = m.f - float(prob.ensemble.groups[-1][0].spectrum.log_gibbs[0]) / beta
    profile = optimal_final_state_profile(prob, budget=budget)
    if m.sigma_f > 0.0:
        eps_asym = std_normal_cdf((w - m.f) / m.sigma_f)
    else:
        eps_asym = 0.0 if w < m.f else (1.0 if w > m.f else 0.5)
    return WorkExtractionResult(
        w=w,
        epsilon_exact=profile.epsilon,
        epsilon_asymptotic=eps_asym,
        f_bat=f_init_total - profile.dissipated,
        f_bat_target=prob.target.free_energy(beta),
    )


def work_for_epsilon(e: Ensemble, eps: float, *, budget: int | None = None,
                     tol: float = 1e-12) -> float:
    """Largest extractable work with exact error at most ``eps`` (bisection).

    The exact error is continuous and nondecreasing in w, so bisection on
    the distillation engine converges to the optimal splitting.
    """
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    m = ensemble_moments(e)
    span = abs(m.f) + 10.0 * m.sigma_f + 10.0 / e.beta
    lo, hi = -span, span

    def error_at(w: float) -> float:
        return exact_error(work_extraction_problem(e, w), budget=budget)

    while error_at(lo) > eps:
        lo -= span
    while error_at(hi) <= eps:
        hi += span
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol * max(1.0, abs(mid)):
            break
        if error_at(mid) <= eps:
            lo = mid
        else:
            hi = mid
    return lo


def work_extraction_pure(psi: Subsystem, n: int, w: float, *,
                         budget: int | None = None) -> WorkExtractionResult:
    """Work extraction from N identical pure copies via a battery ancilla."""
    trivial_target = TargetSpec(0.0)
    eps_exact = exact_error_pure(psi, n, trivial_target, ancilla_gap=w, budget=budget)
    m = pure_moments(psi, n)
    if m.sigma_f > 0.0:
        eps_asym = std_normal_cdf((w - m.f) / m.sigma_f)
    else:
        raise ValueError("eigenstate input: zero fluctuation, "
                         "Gaussian work formula undefined")
    return WorkExtractionResult(
        w=w,
        epsilon_exact=eps_exact,
        epsilon_asymptotic=eps_asym,
        f_bat=math.nan,  # only lower-bounded for pure inputs
        f_bat_target=w + math.log1p(math.exp(-psi.spectrum.beta * w)) / psi.spectrum.beta,
    )


def work_pure_for_epsilon(psi: Subsystem, n: int, eps: float) -> float:
    """Second-order optimal work from N pure copies:
    N(<H> + log Z/beta) + sigma_f * PhiInv(eps)."""
    m = pure_moments(psi, n)
    if m.sigma_f == 0.0:
        raise ValueError("eigenstate input: zero fluctuation")
    return m.f + m.sigma_f * std_normal_quantile(eps)


# ---------------------------------------------------------------------------
# Information erasure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ErasureResult:
    """Work cost of resetting trivial-Hamiltonian registers to all-ground."""

    w_cost: float
    epsilon: float
    entropy: float
    sigma_f: float
    exact: bool  # True when the closed maximally-mixed form applies


def _check_trivial(e: Ensemble):
    for i, (sub, _) in enumerate(e.groups):
        energies = sub.spectrum.energies
        if np.ptp(energies) > 1e-12 * max(1.0, float(np.abs(energies).max())):
            raise ValueError(
                f"group {i}: erasure requires trivial Hamiltonians "
                "(use the general distillation interface otherwise)")
        if sub.is_pure:
            raise ValueError(f"group {i}: erasure of pure registers is free; "
                             "supply incoherent states")


def _erasure_entropy(e: Ensemble) -> float:
    terms = []
    for sub, count in e.groups:
        p = sub.state.populations
        nz = p[p > 0]
        terms.append(-count * math.fsum(nz * np.log(nz)))
    return math.fsum(terms)


def erasure_cost(e: Ensemble, eps: float) -> ErasureResult:
    """Work cost of erasing the registers with infidelity at most ``eps``.

    Maximally mixed registers have vanishing free energy fluctuations and
    get the closed form N/beta (log2 - log(1-eps)/N) (log d for qudits);
    otherwise the second-order cost S/beta - sigma_f*PhiInv(eps) applies.
    """
    _check_trivial(e)
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    beta = e.beta
    entropy = _erasure_entropy(e)
    m = ensemble_moments(e)
    all_mixed = all(
        np.allclose(sub.state.populations, 1.0 / sub.spectrum.dim, atol=1e-12)
        for sub, _ in e.groups)
    if all_mixed:
        log_dims = math.fsum(c * math.log(sub.spectrum.dim) for sub, c in e.groups)
        w = (log_dims - math.log1p(-eps)) / beta
        return ErasureResult(w, eps, entropy, 0.0, exact=True)
    if m.sigma_f == 0.0:
        w = entropy / beta
    elif eps == 0.0:
        raise ValueError("zero-error cost diverges for fluctuating registers; "
                         "use erasure_cost_exact")
    else:
        w = entropy / beta - m.sigma_f * std_normal_quantile(eps)
    return ErasureResult(w, eps, entropy, m.sigma_f, exact=False)


def erasure_problem(e: Ensemble, w: float) -> DistillationProblem:
    """Erasure as distillation: excited battery in, all-ground plus
    de-excited battery out (identical total Hamiltonian)."""
    _check_trivial(e)
    beta = e.beta
    bat = battery(w, beta, excited=True)
    log_target = math.fsum(
        c * float(sub.spectrum.log_gibbs[0]) for sub, c in e.groups)
    log_target += float(bat.spectrum.log_gibbs[0])
    return DistillationProblem(e.extended(Ensemble.copies(bat, 1)), TargetSpec(log_target))


def erasure_cost_exact(e: Ensemble, eps: float, *, budget: int | None = None,
                       tol: float = 1e-12) -> float:
    """Smallest invested work whose exact erasure error is at most ``eps``."""
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    _check_trivial(e)
    entropy = _erasure_entropy(e)
    m = ensemble_moments(e)
    span = entropy / e.beta + 10.0 * m.sigma_f + 10.0 / e.beta

    def error_at(w: float) -> float:
        return exact_error(erasure_problem(e, w), budget=budget)

    lo, hi = -span, span
    while error_at(hi) > eps:
        hi += span
    while error_at(lo) <= eps:
        lo -= span
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol * max(1.0, abs(mid)):
            break
        if error_at(mid) <= eps:
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# Thermodynamically-free encoding
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EncodingResult:
    """Optimal message count and rate for thermodynamically-free encoding.

    ``experimental`` marks non-identical ensembles, where the matching
    converse of the second-order expansion is an open question.
    """

    m: int
    rate: float
    eps_d: float
    log_m_asymptotic: float
    experimental: bool

    def __post_init__(self):
        if self.m < 1 or self.rate < 0:
            raise ValueError("message count must be >= 1 and rate >= 0")


def encoding_capacity(e: Ensemble, eps_d: float) -> EncodingResult:
    """Messages encodable at average decoding error ``eps_d``:
    log M = beta F + beta sigma_f PhiInv(eps_d), floored to an integer."""
    if not 0.0 < eps_d < 1.0:
        raise ValueError("eps_d must lie in (0, 1)")
    m = ensemble_moments(e)
    log_m = m.beta_f
    if m.sigma_f > 0.0:
        log_m += m.beta_sigma_f * std_normal_quantile(eps_d)
    count = max(1, math.floor(math.exp(min(log_m, 700.0))))
    return EncodingResult(
        m=count,
        rate=math.log(count) / e.n_total,
        eps_d=eps_d,
        log_m_asymptotic=log_m,
        experimental=not e.is_identical_copies,
    )


def encoding_error_at(e: Ensemble, m: int, *, budget: int | None = None) -> float:
    """Exact distillation error onto an M-fold degenerate trivial target."""
    if m < 1:
        raise ValueError("message count must be >= 1")
    return exact_error(DistillationProblem(e, TargetSpec.degenerate(m)), budget=budget)


# ---------------------------------------------------------------------------
# Hypothesis-testing relative entropy
# ---------------------------------------------------------------------------

def hypothesis_testing_rel_entropy(p, g, eps: float) -> float:
    """D_H^eps(p||g): minus the log of the minimal type-II error among
    tests with type-I error at most ``eps``.

    Solved exactly by the likelihood-ratio greedy: accept entries in
    decreasing p/g order until the p-mass constraint 1-eps binds, taking
    the boundary entry fractionally.
    """
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    p = np.asarray(p, dtype=float)
    g = np.asarray(g, dtype=float)
    if p.shape != g.shape:
        raise ValueError("vectors must have equal length")
    keep = p > 0
    p = p[keep]
    g = g[keep]
    with np.errstate(divide="ignore", invalid="ignore"):
        order = np.argsort(-np.where(g > 0, p / g, np.inf), kind="stable")
    p = p[order]
    g = g[order]
    needed = 1.0 - eps
    cost = 0.0
    for pi, gi in zip(p, g):
        if needed <= pi:
            cost += (needed / pi) * gi
            needed = 0.0
            break
        cost += gi
        needed -= pi
    if cost <= 0.0:
        return math.inf
    return -math.log(cost)


def hypothesis_testing_rel_entropy_product(e: Ensemble, eps: float, *,
                                           atoms: OrderedAtoms | None = None,
                                           budget: int | None = None) -> float:
    """D_H^eps of an embedded product distribution versus its Gibbs state,
    evaluated through the atoms' inverse Lorenz curve."""
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    if atoms is None:
        atoms = build_atoms(e) if budget is None else build_atoms(e, budget=budget)
    return -log_abscissa_at_mass(atoms, 1.0 - eps)


def hypothesis_testing_second_order(e: Ensemble, eps: float) -> float:
    """Second-order expansion beta*F + beta*sigma_f*PhiInv(eps) of D_H^eps.

    Diverges to -inf at eps = 0 for fluctuating ensembles (the expansion's
    quantile does); reduces to beta*F when sigma_f vanishes.
    """
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    m = ensemble_moments(e)
    if m.sigma_f == 0.0:
        return m.beta_f
    if eps == 0.0:
        return -math.inf
    return m.beta_f + m.beta_sigma_f * std_normal_quantile(eps)

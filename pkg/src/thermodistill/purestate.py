"""Distillation from many identical pure copies.

Because the target is incoherent, anything reachable from psi^(x)N is
reachable from its dephased version, whose dephased-and-diagonalized
populations are the multinomial type-class distribution over occupation
vectors.  Exactness of this picture requires the spectrum to be
incommensurable, so that distinct occupation vectors carry distinct total
energies.

An optional ancilla (battery) that starts and ends in energy eigenstates
enters only as an additive shift of the free energy gap by its energy
splitting; eigenstates carry no fluctuations.

The asymptotic error is the Gaussian mass below a hyperplane in
occupation-fluctuation space; the signed hyperplane distance equals the
standardized free energy gap, which a seeded multinomial Monte Carlo
estimator validates independently of the atom engine.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .asymptotics import std_normal_cdf
from .atoms import OrderedAtoms, build_atoms, mass_at_log_abscissa
from .majorization import FinalStateSummary, final_state_profile_from_atoms
from .model import Ensemble, Subsystem, TargetSpec
from .moments import MomentSummary, ensemble_moments

__all__ = [
    "DEFAULT_MC_SEED",
    "TypeClassDistribution",
    "HyperplaneGeometry",
    "dephase_to_types",
    "exact_error_pure",
    "asymptotic_error_pure",
    "mc_hyperplane_probability",
    "dissipation_lower_bound_pure",
    "pure_final_state_profile",
    "pure_moments",
]

DEFAULT_MC_SEED = 0xC0FFEE


def _require_pure(sub: Subsystem):
    if not sub.is_pure:
        raise TypeError("expected a subsystem in a pure state")


@dataclass(frozen=True)
class TypeClassDistribution:
    """Multinomial type-class distribution of N dephased identical copies,
    exposed through its atom set (one atom per occupation vector)."""

    atoms: OrderedAtoms
    n_copies: int
    base: Subsystem

    @property
    def n_types(self) -> int:
        return len(self.atoms)

    @property
    def entropy(self) -> float:
        """Shannon entropy of the type-class masses (O(log N))."""
        lp = self.atoms.log_prob
        return -math.fsum(np.exp(lp) * lp)


def dephase_to_types(psi: Subsystem, n: int, *, budget: int | None = None,
                     allow_commensurable: bool = False) -> TypeClassDistribution:
    """Type-class distribution of ``n`` dephased copies of a pure subsystem."""
    _require_pure(psi)
    ensemble = Ensemble.copies(psi, n)
    kwargs = {"allow_commensurable": allow_commensurable}
    if budget is not None:
        kwargs["budget"] = budget
    return TypeClassDistribution(build_atoms(ensemble, **kwargs), n, psi)


def pure_moments(psi: Subsystem, n: int, target: TargetSpec | None = None,
                 ancilla_gap: float = 0.0) -> MomentSummary:
    """Moment summary of N pure copies; the ancilla splitting shifts delta_f."""
    _require_pure(psi)
    m = ensemble_moments(Ensemble.copies(psi, n), target)
    if target is not None and ancilla_gap != 0.0:
        m = MomentSummary(f=m.f, sigma_f=m.sigma_f, kappa_f=m.kappa_f,
                          beta=m.beta, delta_f=m.delta_f - ancilla_gap)
    return m


def _log_abscissa(psi: Subsystem, target: TargetSpec, ancilla_gap: float) -> float:
    return target.log_gibbs_weight - psi.spectrum.beta * ancilla_gap


def exact_error_pure(psi: Subsystem, n: int, target: TargetSpec,
                     ancilla_gap: float = 0.0, *,
                     types: TypeClassDistribution | None = None,
                     budget: int | None = None,
                     allow_commensurable: bool = False) -> float:
    """Exact optimal error for distilling N pure copies into a sharp target.

    ``ancilla_gap`` is the energy splitting of an optional battery taken
    from its ground to its excited eigenstate alongside the transformation.
    """
    tcd = types if types is not None else dephase_to_types(
        psi, n, budget=budget, allow_commensurable=allow_commensurable)
    mass = mass_at_log_abscissa(tcd.atoms, _log_abscissa(psi, target, ancilla_gap))
    return min(1.0, max(0.0, 1.0 - mass))


@dataclass(frozen=True)
class HyperplaneGeometry:
    """Gaussian picture of the type-class fluctuations.

    ``covariance`` is N(diag(p) - p p^T) (one zero mode along the all-ones
    vector); the signed distance of the acceptance hyperplane from the
    origin equals the standardized free energy gap.
    """

    covariance: np.ndarray
    energies: np.ndarray
    signed_distance: float

    @staticmethod
    def for_problem(psi: Subsystem, n: int, delta_f: float) -> "HyperplaneGeometry":
        _require_pure(psi)
        p = psi.state.populations
        e = psi.spectrum.energies
        cov = n * (np.diag(p) - np.outer(p, p))
        quad = float(e @ cov @ e)
        if quad <= 0.0:
            raise ValueError("zero energy fluctuation: hyperplane geometry degenerate")
        return HyperplaneGeometry(cov, e, delta_f / math.sqrt(quad))


def asymptotic_error_pure(psi: Subsystem, target: TargetSpec, n: int,
                          ancilla_gap: float = 0.0) -> float:
    """Gaussian limit Phi(-delta_f/sigma_f) for N pure copies.

    Internally cross-checks that the hyperplane distance sqrt(E.Cov.E)
    reproduces the moment-summary sigma_f.  Available for commensurable
    spectra too (with a warning): colliding type classes only shift the
    dephased picture, not the Gaussian limit's ingredients.
    """
    _require_pure(psi)
    if not psi.spectrum.incommensurable:
        warnings.warn("spectrum not flagged incommensurable: the Gaussian error "
                      "law is certified only for incommensurable spectra",
                      stacklevel=2)
    m = pure_moments(psi, n, target, ancilla_gap)
    if m.sigma_f == 0.0:
        raise ValueError("energy eigenstate input: zero fluctuation, "
                         "asymptotic error formula undefined")
    geom = HyperplaneGeometry.for_problem(psi, n, m.delta_f)
    if abs(geom.signed_distance - m.x) > 1e-10 * max(1.0, abs(m.x)):
        raise AssertionError("hyperplane distance disagrees with moment summary")
    return std_normal_cdf(-m.x)


def mc_hyperplane_probability(psi: Subsystem, target: TargetSpec, n: int,
                              samples: int, seed: int = DEFAULT_MC_SEED,
                              ancilla_gap: float = 0.0, threads: int = 1):
    """Monte Carlo estimate of the success probability 1 - eps_N.

    Draws occupation vectors k ~ Multinomial(n, p) and reports the
    fraction satisfying sqrt(n) s.E >= -delta_f with s = (k - n p)/sqrt(n),
    together with the binomial standard error.  Deterministic for fixed
    (seed, samples, threads): the sample budget is split into one counted
    substream per thread.
    """
    _require_pure(psi)
    if samples < 1000:
        raise ValueError("use at least 1000 samples")
    if threads < 1:
        raise ValueError("threads must be >= 1")
    p = psi.state.populations
    e = psi.spectrum.energies
    delta_f = pure_moments(psi, n, target, ancilla_gap).delta_f

    chunks = np.full(threads, samples // threads)
    chunks[: samples % threads] += 1
    streams = np.random.SeedSequence(seed).spawn(threads)

    def count_hits(chunk: int, ss) -> int:
        rng = np.random.default_rng(ss)
        hits = 0
        remaining = chunk
        while remaining > 0:
            batch = min(remaining, 200_000)
            k = rng.multinomial(n, p, size=batch)
            lhs = (k - n * p) @ e  # = sqrt(n) * s.E
            hits += int(np.count_nonzero(lhs >= -delta_f))
            remaining -= batch
        return hits

    if threads == 1:
        total_hits = count_hits(int(chunks[0]), streams[0])
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            total_hits = sum(pool.map(count_hits, (int(c) for c in chunks), streams))
    estimate = total_hits / samples
    stderr = math.sqrt(max(estimate * (1.0 - estimate), 1.0 / samples) / samples)
    return estimate, stderr


def dissipation_lower_bound_pure(psi: Subsystem, target: TargetSpec, n: int,
                                 eps: float, ancilla_gap: float = 0.0) -> float:
    """Lower bound a(eps)*sigma_f on the dissipated free energy (an
    inequality for pure inputs, not an equality)."""
    from .asymptotics import dissipation_coefficient

    m = pure_moments(psi, n, target, ancilla_gap)
    if m.sigma_f == 0.0:
        raise ValueError("zero fluctuation input")
    return dissipation_coefficient(eps) * m.sigma_f


def pure_final_state_profile(psi: Subsystem, n: int, target: TargetSpec,
                             ancilla_gap: float = 0.0, *,
                             types: TypeClassDistribution | None = None,
                             budget: int | None = None) -> FinalStateSummary:
    """Final-state profile of the dephased problem; its dissipation is a
    lower bound on the true pure-state dissipation."""
    tcd = types if types is not None else dephase_to_types(psi, n, budget=budget)
    return final_state_profile_from_atoms(
        tcd.atoms, _log_abscissa(psi, target, ancilla_gap), psi.spectrum.beta,
        is_lower_bound=True, dephasing_entropy=tcd.entropy)

"""Domain types: spectra, states, subsystems, ensembles and sharp targets.

Everything downstream consumes only these types.  Conventions:

* one inverse temperature ``beta`` for the whole ensemble (a single bath),
* entropic quantities in nats,
* log-domain storage for anything that enters a product over many
  subsystems (Gibbs weights, populations); plain vectors are views,
* zero populations are legal and carried as ``-inf`` log-probabilities.

All types are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "Spectrum",
    "IncoherentState",
    "PureState",
    "Subsystem",
    "Ensemble",
    "TargetSpec",
    "gibbs_weights",
    "target_from_hamiltonian",
    "incommensurability_heuristic",
]

_NORM_TOL = 1e-12


def _as_float_vector(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-d vector")
    return v


@dataclass(frozen=True)
class Spectrum:
    """A finite Hamiltonian spectrum together with the bath's inverse temperature.

    Derived Gibbs weights are computed in log space:
    ``log_gibbs[i] = -beta*E_i - log Z`` with ``log Z = logsumexp(-beta*E)``.

    ``incommensurable`` is a user-supplied assertion that no two energies
    have a rational ratio; it gates the exact pure-state machinery and can
    be sanity-checked with :func:`incommensurability_heuristic`.
    """

    energies: np.ndarray
    beta: float
    incommensurable: bool = False
    log_gibbs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        energies = _as_float_vector(self.energies, "energies")
        if not np.all(np.isfinite(energies)):
            raise ValueError("energies must be finite")
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ValueError("beta must be a positive finite real")
        energies = energies.copy()
        energies.flags.writeable = False
        object.__setattr__(self, "energies", energies)
        logw = -self.beta * energies
        log_gibbs = logw - logsumexp(logw)
        log_gibbs.flags.writeable = False
        object.__setattr__(self, "log_gibbs", log_gibbs)

    @property
    def dim(self) -> int:
        return self.energies.size

    @property
    def log_z(self) -> float:
        return float(logsumexp(-self.beta * self.energies))

    @property
    def gibbs(self) -> np.ndarray:
        """Gibbs occupation vector (normalized, positive)."""
        return np.exp(self.log_gibbs)

    @staticmethod
    def from_gibbs(gibbs, beta: float = 1.0, incommensurable: bool = False) -> "Spectrum":
        """Spectrum whose thermal state equals ``gibbs`` (so Z = 1)."""
        g = _as_float_vector(gibbs, "gibbs")
        if np.any(g <= 0):
            raise ValueError("Gibbs weights must be strictly positive")
        if abs(g.sum() - 1.0) > 1e-9:
            raise ValueError("Gibbs weights must sum to 1")
        return Spectrum(-np.log(g) / beta, beta, incommensurable=incommensurable)


def gibbs_weights(s: Spectrum) -> np.ndarray:
    """Thermal occupation vector of ``s`` (log-space softmax, then exp)."""
    return s.gibbs


def _check_populations(populations) -> np.ndarray:
    p = _as_float_vector(populations, "populations")
    if np.any(p < -_NORM_TOL):
        raise ValueError("populations must be nonnegative")
    p = np.clip(p, 0.0, None)
    if abs(p.sum() - 1.0) > _NORM_TOL:
        raise ValueError(f"populations must sum to 1 (got {p.sum()!r})")
    p.flags.writeable = False
    return p


@dataclass(frozen=True)
class IncoherentState:
    """Energy-diagonal state, represented by its population vector."""

    populations: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "populations", _check_populations(self.populations))

    @property
    def log_populations(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.populations)


@dataclass(frozen=True)
class PureState:
    """Pure state given by level populations (squared amplitudes) and phases.

    Phases are retained for completeness only; no computation in this
    package depends on them (dephasing arguments remove them exactly).
    """

    populations: np.ndarray
    phases: np.ndarray | None = None

    def __post_init__(self):
        pops = _check_populations(self.populations)
        object.__setattr__(self, "populations", pops)
        if self.phases is not None:
            ph = _as_float_vector(self.phases, "phases").copy()
            if ph.size != pops.size:
                raise ValueError("phases length must match populations")
            ph.flags.writeable = False
            object.__setattr__(self, "phases", ph)

    @property
    def log_populations(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.populations)


State = IncoherentState | PureState


@dataclass(frozen=True)
class Subsystem:
    """A spectrum plus a state living on it."""

    spectrum: Spectrum
    state: State

    def __post_init__(self):
        if self.state.populations.size != self.spectrum.dim:
            raise ValueError("state dimension does not match spectrum")

    @property
    def is_pure(self) -> bool:
        return isinstance(self.state, PureState)

    @staticmethod
    def incoherent(energies, populations, beta: float = 1.0) -> "Subsystem":
        return Subsystem(Spectrum(energies, beta), IncoherentState(populations))

    @staticmethod
    def from_gibbs(gibbs, populations, beta: float = 1.0) -> "Subsystem":
        return Subsystem(Spectrum.from_gibbs(gibbs, beta), IncoherentState(populations))

    @staticmethod
    def pure(energies, populations, beta: float = 1.0, phases=None,
             incommensurable: bool = False) -> "Subsystem":
        return Subsystem(Spectrum(energies, beta, incommensurable=incommensurable),
                         PureState(populations, phases))


@dataclass(frozen=True)
class Ensemble:
    """A multiset of independent subsystems, grouped by identical type.

    ``groups`` is a sequence of ``(Subsystem, count)`` pairs; the total
    particle number is ``n_total = sum(counts)``.  All groups must share
    one inverse temperature (a single bath).
    """

    groups: tuple[tuple[Subsystem, int], ...]

    def __post_init__(self):
        groups = tuple((sub, int(c)) for sub, c in self.groups)
        if not groups:
            raise ValueError("ensemble must contain at least one group")
        for i, (sub, c) in enumerate(groups):
            if c < 1:
                raise ValueError(f"group {i}: count must be a positive integer")
        betas = [sub.spectrum.beta for sub, _ in groups]
        for i, b in enumerate(betas[1:], start=1):
            if not math.isclose(b, betas[0], rel_tol=0.0, abs_tol=1e-12):
                raise ValueError(
                    f"mixed inverse temperatures: group 0 has beta={betas[0]!r}, "
                    f"group {i} has beta={b!r}")
        object.__setattr__(self, "groups", groups)

    @property
    def beta(self) -> float:
        return self.groups[0][0].spectrum.beta

    @property
    def n_total(self) -> int:
        return sum(c for _, c in self.groups)

    @property
    def is_identical_copies(self) -> bool:
        return len(self.groups) == 1

    def extended(self, other: "Ensemble") -> "Ensemble":
        """Concatenation of two ensembles (same bath)."""
        return Ensemble(self.groups + other.groups)

    @staticmethod
    def of(*groups: tuple[Subsystem, int]) -> "Ensemble":
        return Ensemble(tuple(groups))

    @staticmethod
    def copies(sub: Subsystem, count: int) -> "Ensemble":
        return Ensemble(((sub, count),))


@dataclass(frozen=True)
class TargetSpec:
    """A sharp energy eigenstate of an arbitrary target Hamiltonian.

    Fully characterized by the log Gibbs weight of the occupied level,
    ``log_gibbs_weight = -beta*E_k - log Z~``; the free energy content of
    the target is ``-log_gibbs_weight / beta``.
    """

    log_gibbs_weight: float

    def __post_init__(self):
        if not (self.log_gibbs_weight <= 1e-15):
            raise ValueError("log Gibbs weight of a level must be <= 0")
        if math.isnan(self.log_gibbs_weight):
            raise ValueError("log Gibbs weight must not be NaN")
        object.__setattr__(self, "log_gibbs_weight", min(0.0, float(self.log_gibbs_weight)))

    def free_energy(self, beta: float) -> float:
        """Non-equilibrium free energy of the sharp target, in energy units."""
        return -self.log_gibbs_weight / beta

    @staticmethod
    def degenerate(n_levels: int) -> "TargetSpec":
        """Sharp state on one of ``n_levels`` degenerate levels (trivial H)."""
        if n_levels < 1:
            raise ValueError("need at least one level")
        return TargetSpec(-math.log(n_levels))


def target_from_hamiltonian(energies, beta: float, k: int) -> TargetSpec:
    """Target spec for level ``k`` of the given spectrum at inverse temperature ``beta``."""
    s = Spectrum(energies, beta)
    if not 0 <= k < s.dim:
        raise IndexError(f"level index {k} out of range for {s.dim} levels")
    return TargetSpec(float(s.log_gibbs[k]))


def incommensurability_heuristic(energies, max_denominator: int = 64,
                                 tol: float = 1e-9) -> bool:
    """Heuristic test that no two energies have a small rational ratio.

    True irrationality is undecidable from floats; this only checks that
    every pairwise ratio stays at least ``tol`` away from all rationals
    with denominator <= ``max_denominator``.  A True result supports (but
    cannot prove) the ``incommensurable`` flag on a :class:`Spectrum`.
    """
    e = _as_float_vector(energies, "energies")
    scale = float(np.abs(e).max())
    if scale == 0.0:
        return e.size == 1
    zeros = np.abs(e) <= tol * scale
    if int(zeros.sum()) > 1:
        return False  # two degenerate zero levels collide
    nz = e[~zeros]
    n = nz.size
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            ratio = nz[i] / nz[j]
            approx = Fraction(ratio).limit_denominator(max_denominator)
            if abs(ratio - float(approx)) <= tol:
                return False
    return True

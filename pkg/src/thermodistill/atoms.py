"""Polynomial-size exact representation of embedded product distributions.

Splitting every level ``i`` of a subsystem into boxes proportional to its
Gibbs weight turns thermomajorization into plain majorization.  Rather
than materializing rational boxes, an *atom* records one class of equal
embedded entries by three log-values:

* ``log_ratio``  - log(p/g) of the class (the embedded entry value, up to
  the global embedding dimension),
* ``log_gamma``  - log of the class's total Gibbs mass,
* ``log_prob``   - log of the class's probability mass
  (= ``log_ratio + log_gamma``).

Ordered by decreasing ratio, partial sums over the top-L embedded entries
become evaluations of the Lorenz curve of the atoms with L/D as the
Gibbs-mass abscissa; the partially consumed class at the cut contributes
linearly.  This is exact for rational Gibbs weights at any embedding
dimension and remains exact in the continuous limit, so the engine stores
only a bookkeeping offset ``log_dim`` (log of the embedding dimension;
0 means the continuous convention D = 1 with fractional boxes).

For a group of ``c`` identical d-level incoherent subsystems the classes
are occupation vectors ``k`` (sum k_i = c) carrying log-multinomial
weights; groups of identical pure copies instead produce one atom per
occupation vector with the multinomial mass concentrated on a single
level (the dephased-and-diagonalized picture), which requires an
incommensurable spectrum.  Cross-group atoms are Cartesian sums.  Classes
whose ratios agree within a tolerance are merged; ties never affect any
partial sum.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.special import gammaln

from .model import Ensemble, PureState

__all__ = [
    "AtomBudgetError",
    "OrderedAtoms",
    "SandwichCheck",
    "build_atoms",
    "top_mass",
    "chi",
    "chi_sandwich_check",
    "mass_at_log_abscissa",
    "plog_at_log_abscissa",
    "log_abscissa_at_mass",
]

DEFAULT_ATOM_BUDGET = 50_000_000
DEFAULT_MERGE_TOL = 1e-12

_NEG_INF = float("-inf")


class AtomBudgetError(Exception):
    """Raised when an exact computation would exceed the atom budget.

    The caller should fall back to the asymptotic formulas or the
    Berry-Esseen bound, which need only the moment summary.
    """


@dataclass(frozen=True)
class OrderedAtoms:
    """Atoms sorted by strictly decreasing ``log_ratio`` with prefix log-sums.

    ``log_dim`` is the log of the total embedding dimension used to talk
    about embedded-entry *counts* (``top_mass``/``chi`` arguments); it has
    no effect on any physical quantity.  ``log_box_gamma`` is the Gibbs
    mass of one embedding box of the class (the largest one, after
    merges) and ``log_dim_floor`` the smallest embedding-dimension log
    that gives every box at least one entry; both only feed the
    final-state uniformization diagnostic.
    """

    log_ratio: np.ndarray
    log_gamma: np.ndarray
    log_box_gamma: np.ndarray
    n_subsystems: int
    log_dim: float = 0.0
    log_dim_floor: float = 0.0
    log_prob: np.ndarray = field(init=False, repr=False, compare=False)
    cum_log_prob: np.ndarray = field(init=False, repr=False, compare=False)
    cum_log_gamma: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("log_ratio", "log_gamma", "log_box_gamma"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        log_prob = self.log_ratio + self.log_gamma
        for name, arr in (("log_prob", log_prob),
                          ("cum_log_prob", np.logaddexp.accumulate(log_prob)),
                          ("cum_log_gamma", np.logaddexp.accumulate(self.log_gamma))):
            arr = np.asarray(arr, dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return self.log_ratio.size

    @property
    def total_log_prob(self) -> float:
        return float(self.cum_log_prob[-1])

    @property
    def total_log_gamma(self) -> float:
        """Log Gibbs mass of the support (< 0 when zero populations were dropped)."""
        return float(self.cum_log_gamma[-1])

    def with_log_dim(self, log_dim: float) -> "OrderedAtoms":
        """Same atoms under a different embedding-dimension bookkeeping."""
        return OrderedAtoms(self.log_ratio, self.log_gamma, self.log_box_gamma,
                            self.n_subsystems, log_dim, self.log_dim_floor)


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def _compositions(total: int, parts: int) -> np.ndarray:
    """All occupation vectors k >= 0 with sum(k) == total, shape (M, parts)."""
    if parts == 1:
        return np.array([[total]], dtype=float)
    out = np.empty((math.comb(total + parts - 1, parts - 1), parts), dtype=float)
    for row, bars in enumerate(combinations(range(total + parts - 1), parts - 1)):
        prev = -1
        for j, b in enumerate(bars):
            out[row, j] = b - prev - 1
            prev = b
        out[row, parts - 1] = total + parts - 2 - prev
    return out


def _group_arrays(sub, count: int):
    """Atom arrays (log_ratio, log_gamma, log_box_gamma) for one group."""
    p = sub.state.populations
    support = p > 0
    logp = np.log(p[support])
    logg = sub.spectrum.log_gibbs[support]
    k = _compositions(count, int(support.sum()))
    log_coeff = gammaln(count + 1) - gammaln(k + 1).sum(axis=1)
    box_gamma = k @ logg
    if isinstance(sub.state, PureState):
        # Dephased identical pure copies: the whole multinomial mass of an
        # occupation class sits on a single energy level.
        log_ratio = log_coeff + k @ (logp - logg)
        log_gamma = box_gamma.copy()
    else:
        log_ratio = k @ (logp - logg)
        log_gamma = log_coeff + box_gamma
    return log_ratio, log_gamma, box_gamma


def _group_size(sub, count: int) -> int:
    d_eff = int(np.count_nonzero(sub.state.populations > 0))
    return math.comb(count + d_eff - 1, d_eff - 1)


def _outer_add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.add.outer(a, b).ravel()


def _merge_ties(log_ratio, log_gamma, log_box_gamma, tol):
    order = np.argsort(-log_ratio, kind="stable")
    log_ratio = log_ratio[order]
    log_gamma = log_gamma[order]
    log_box_gamma = log_box_gamma[order]
    if log_ratio.size > 1 and tol > 0:
        new_segment = np.empty(log_ratio.size, dtype=bool)
        new_segment[0] = True
        new_segment[1:] = (log_ratio[:-1] - log_ratio[1:]) > tol
        if not new_segment.all():
            starts = np.flatnonzero(new_segment)
            log_prob = log_ratio + log_gamma
            log_gamma = np.logaddexp.reduceat(log_gamma, starts)
            log_prob = np.logaddexp.reduceat(log_prob, starts)
            log_box_gamma = np.maximum.reduceat(log_box_gamma, starts)
            log_ratio = log_prob - log_gamma
    return log_ratio, log_gamma, log_box_gamma


def build_atoms(e: Ensemble, *, budget: int = DEFAULT_ATOM_BUDGET,
                merge_tol: float = DEFAULT_MERGE_TOL,
                allow_commensurable: bool = False) -> OrderedAtoms:
    """Atoms of the embedded product distribution of a whole ensemble.

    Incoherent groups expand into occupation classes, pure groups into
    dephased type classes (their spectra must carry the incommensurable
    flag unless ``allow_commensurable`` is set, in which case colliding
    classes are merged by ratio without certification), and groups are
    combined by Cartesian sums.  Raises :class:`AtomBudgetError` when the
    class count would exceed ``budget``.
    """
    total = 1
    for sub, count in e.groups:
        if isinstance(sub.state, PureState) and not sub.spectrum.incommensurable:
            if not allow_commensurable:
                raise ValueError(
                    "pure-state group requires a spectrum flagged incommensurable "
                    "for exact computations (pass allow_commensurable=True to merge "
                    "colliding classes without certification)")
            warnings.warn("commensurable pure-state spectrum: colliding type "
                          "classes are merged by ratio; exact results are not "
                          "certified in this regime", stacklevel=2)
        size = _group_size(sub, count)
        total *= size
        if total > budget:
            raise AtomBudgetError(
                f"atom class count exceeds budget ({total} > {budget}); "
                "fall back to the asymptotic formulas or the Berry-Esseen bound")

    log_ratio = log_gamma = log_box = None
    log_dim_floor = 0.0
    for sub, count in e.groups:
        r, g, b = _group_arrays(sub, count)
        log_dim_floor += count * float(-np.min(sub.spectrum.log_gibbs))
        if log_ratio is None:
            log_ratio, log_gamma, log_box = r, g, b
        else:
            log_ratio = _outer_add(log_ratio, r)
            log_gamma = _outer_add(log_gamma, g)
            log_box = _outer_add(log_box, b)
    log_ratio, log_gamma, log_box = _merge_ties(log_ratio, log_gamma, log_box, merge_tol)
    return OrderedAtoms(log_ratio, log_gamma, log_box,
                        n_subsystems=e.n_total, log_dim=0.0,
                        log_dim_floor=log_dim_floor)


# ---------------------------------------------------------------------------
# Lorenz-curve queries (all cuts use linear interpolation inside a class)
# ---------------------------------------------------------------------------

def _log_minus(log_big: float, log_small: float) -> float:
    """log(exp(log_big) - exp(log_small)); -inf when the gap underflows."""
    diff = log_small - log_big
    if diff >= 0.0:
        return _NEG_INF
    ex = math.exp(diff)
    if ex >= 1.0:
        return _NEG_INF
    return log_big + math.log1p(-ex)


def mass_at_log_abscissa(oa: OrderedAtoms, log_a: float) -> float:
    """Lorenz-curve value: probability mass of the top classes whose
    cumulative Gibbs mass is ``exp(log_a)``; clamps at the total mass."""
    if log_a == _NEG_INF:
        return 0.0
    clg = oa.cum_log_gamma
    if log_a >= clg[-1]:
        return min(1.0, math.exp(oa.cum_log_prob[-1]))
    j = int(np.searchsorted(clg, log_a, side="left"))
    if j == 0:
        part = math.exp(oa.log_ratio[0] + log_a)
        return min(1.0, part)
    log_rem = _log_minus(log_a, clg[j - 1])
    part = math.exp(oa.log_ratio[j] + log_rem)
    return min(1.0, math.exp(oa.cum_log_prob[j - 1]) + part)


def plog_at_log_abscissa(oa: OrderedAtoms, log_a: float) -> float:
    """sum of (probability x log_ratio) over the same top region.

    With the continuous convention this is the partial sum of
    p-hat * log(p-hat) over the top embedded entries, up to the global
    ``-log_dim`` shift per unit mass.
    """
    if log_a == _NEG_INF:
        return 0.0
    clg = oa.cum_log_gamma
    prob = np.exp(oa.log_prob)
    if log_a >= clg[-1]:
        return math.fsum(prob * oa.log_ratio)
    j = int(np.searchsorted(clg, log_a, side="left"))
    if j == 0:
        head = 0.0
        log_rem = log_a
    else:
        head = math.fsum(prob[:j] * oa.log_ratio[:j])
        log_rem = _log_minus(log_a, clg[j - 1])
    frac_prob = math.exp(oa.log_ratio[j] + log_rem)
    return head + frac_prob * float(oa.log_ratio[j])


def log_abscissa_at_mass(oa: OrderedAtoms, mass: float) -> float:
    """Inverse Lorenz curve: smallest log Gibbs abscissa reaching ``mass``."""
    if mass <= 0.0:
        return _NEG_INF
    clp = oa.cum_log_prob
    if math.log(mass) >= clp[-1]:
        return float(oa.cum_log_gamma[-1])
    log_m = math.log(mass)
    j = int(np.searchsorted(clp, log_m, side="left"))
    if j == 0:
        return log_m - float(oa.log_ratio[0])
    log_needed = _log_minus(log_m, clp[j - 1])
    log_width = log_needed - float(oa.log_ratio[j])
    return float(np.logaddexp(oa.cum_log_gamma[j - 1], log_width))


def top_mass(oa: OrderedAtoms, log_l: float) -> float:
    """Sum of the top ``L = exp(log_l)`` embedded entries (fractional cut)."""
    return mass_at_log_abscissa(oa, log_l - oa.log_dim)


def _chi_index(oa: OrderedAtoms, log_l: float) -> int:
    """Number of atoms whose embedded-entry value is >= 1/L."""
    threshold = oa.log_dim - log_l
    rev = -oa.log_ratio  # ascending
    return int(np.searchsorted(rev, -threshold, side="right"))


def chi(oa: OrderedAtoms, log_l: float) -> float:
    """Log of the number of embedded entries with value >= exp(-log_l)."""
    j = _chi_index(oa, log_l)
    if j == 0:
        return _NEG_INF
    return oa.log_dim + float(oa.cum_log_gamma[j - 1])


def _mass_at_chi(oa: OrderedAtoms, log_l: float) -> float:
    j = _chi_index(oa, log_l)
    if j == 0:
        return 0.0
    return min(1.0, math.exp(oa.cum_log_prob[j - 1]))


@dataclass(frozen=True)
class SandwichCheck:
    """Two-sided bracket of a top-L partial sum via the counting function."""

    lower: float
    upper: float
    log_c: float
    conclusive: bool


def chi_sandwich_check(oa: OrderedAtoms, log_l: float, delta: float) -> SandwichCheck:
    """Bracket the top-L sum between the counting-function cuts at L and
    at alpha*L / c, with alpha = exp(delta * sqrt(n_subsystems)).

    Verifies the ordering chi(L) <= L <= chi(alpha L)/c whenever c > 0;
    a vanishing band mass c makes the upper side vacuous (inconclusive).
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    log_alpha = delta * math.sqrt(oa.n_subsystems)
    lower = _mass_at_chi(oa, log_l)
    s_half = _mass_at_chi(oa, log_l + 0.5 * log_alpha)
    s_full = _mass_at_chi(oa, log_l + log_alpha)
    band = s_full - s_half
    if band <= 0.0:
        return SandwichCheck(lower=lower, upper=1.0, log_c=_NEG_INF, conclusive=False)
    log_c = 0.5 * log_alpha + math.log(band)
    log_chi_l = chi(oa, log_l)
    log_upper_count = chi(oa, log_l + log_alpha) - log_c
    if log_chi_l > log_l + 1e-9 or log_l > log_upper_count + 1e-9:
        raise RuntimeError("counting-function sandwich ordering violated "
                           f"(chi={log_chi_l}, log_l={log_l}, upper={log_upper_count})")
    upper = top_mass(oa, log_upper_count)
    return SandwichCheck(lower=lower, upper=upper, log_c=log_c, conclusive=True)

"""Second-order closed forms: Gaussian error laws, the Berry-Esseen
single-shot bound, the dissipation coefficient a(eps) and regime labels.

The optimal transformation error tends to Phi(-delta_f/sigma_f) and the
free energy dissipated by the optimal process to a(eps)*sigma_f, with

    a(eps) = -PhiInv(eps)*(1 - eps) + exp(-PhiInv(eps)^2/2)/sqrt(2*pi).

A computable single-shot upper bound adds C*kappa_f^3/sigma_f^3 to the
Gaussian term, with the Berry-Esseen constant C known to lie in
[0.4097, 0.4748]; only the upper end yields a valid guarantee.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .moments import MomentSummary

__all__ = [
    "BERRY_ESSEEN_C_UPPER",
    "BERRY_ESSEEN_C_LOWER",
    "Regime",
    "AsymptoticReport",
    "std_normal_cdf",
    "std_normal_pdf",
    "std_normal_quantile",
    "epsilon_asymptotic",
    "epsilon_berry_esseen_bound",
    "dissipation_coefficient",
    "dissipation_asymptotic",
    "dissipation_from_gap",
    "classify_regime",
    "asymptotic_report",
]

BERRY_ESSEEN_C_UPPER = 0.4748
BERRY_ESSEEN_C_LOWER = 0.4097  # informational; not a valid bound constant

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def std_normal_cdf(x: float) -> float:
    """Standard normal CDF via erfc (absolute error < 1e-14)."""
    return 0.5 * math.erfc(-x / _SQRT2)


def std_normal_pdf(x: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * x * x)


# Acklam's rational approximation to the inverse normal CDF.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def _acklam(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
               ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    if p > 1.0 - _P_LOW:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        return -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    q = p - 0.5
    r = q * q
    return (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
           (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)


def std_normal_quantile(p: float) -> float:
    """Inverse standard normal CDF: rational approximation plus one Newton step."""
    if not 0.0 < p < 1.0:
        raise ValueError("quantile defined only on the open interval (0, 1)")
    x = _acklam(p)
    pdf = std_normal_pdf(x)
    if pdf > 0.0:
        x -= (std_normal_cdf(x) - p) / pdf
    return x


def epsilon_asymptotic(m: MomentSummary) -> float:
    """Gaussian limit Phi(-delta_f/sigma_f) of the optimal error."""
    if m.delta_f is None:
        raise ValueError("moment summary carries no target")
    if m.sigma_f == 0.0:
        if m.delta_f > 0.0:
            return 0.0
        if m.delta_f < 0.0:
            return 1.0
        raise ValueError("error formula undefined at sigma_f = 0 with delta_f = 0")
    return std_normal_cdf(-m.x)


def epsilon_berry_esseen_bound(m: MomentSummary, c: float = BERRY_ESSEEN_C_UPPER) -> float:
    """Single-shot upper bound Phi(-x) + C*(kappa_f/sigma_f)^3, clamped to [0, 1]."""
    base = epsilon_asymptotic(m)
    if m.sigma_f == 0.0:
        return base
    if not math.isfinite(m.kappa_f):
        raise ValueError("kappa_f must be finite")
    return min(1.0, max(0.0, base + c * (m.kappa_f / m.sigma_f) ** 3))


def dissipation_coefficient(eps: float) -> float:
    """a(eps): dissipated free energy per unit of free energy fluctuation."""
    if not 0.0 < eps < 1.0:
        raise ValueError("a(eps) defined only on the open interval (0, 1)")
    z = std_normal_quantile(eps)
    return -z * (1.0 - eps) + std_normal_pdf(z)


def dissipation_asymptotic(m: MomentSummary, eps: float) -> float:
    """Second-order dissipated free energy a(eps)*sigma_f of the optimal process."""
    return dissipation_coefficient(eps) * m.sigma_f


def dissipation_from_gap(delta_f: float, sigma_f: float) -> float:
    """Dissipation parameterized by the free energy gap:
    (1 - Phi(-x))*delta_f + phi(x)*sigma_f with x = delta_f/sigma_f.

    Coincides with a(eps)*sigma_f at eps = Phi(-x).
    """
    if sigma_f <= 0.0:
        raise ValueError("sigma_f must be positive")
    x = delta_f / sigma_f
    return (1.0 - std_normal_cdf(-x)) * delta_f + std_normal_pdf(x) * sigma_f


class Regime(enum.Enum):
    """Limit behaviour of the error as the gap outgrows the fluctuations."""

    TARGET_MUCH_LOWER = "target-much-lower"    # delta_f >> sigma_f: error -> 0
    TARGET_MUCH_HIGHER = "target-much-higher"  # delta_f << -sigma_f: error -> 1
    COMPARABLE = "comparable"                  # |x| moderate: genuinely Gaussian


def classify_regime(m: MomentSummary, threshold: float = 6.0) -> Regime:
    """Label by the standardized gap; |x| <= threshold counts as comparable
    (Phi(+-6) differs from {1, 0} by less than 1e-9)."""
    if m.delta_f is None:
        raise ValueError("moment summary carries no target")
    if m.sigma_f == 0.0 and m.delta_f == 0.0:
        return Regime.COMPARABLE
    x = m.x
    if abs(x) <= threshold:
        return Regime.COMPARABLE
    return Regime.TARGET_MUCH_LOWER if x > 0 else Regime.TARGET_MUCH_HIGHER


@dataclass(frozen=True)
class AsymptoticReport:
    """Closed-form summary at the Gaussian-optimal operating point."""

    x: float
    epsilon_asymptotic: float
    epsilon_upper_bound: float
    dissipation_asymptotic: float
    regime: Regime


def asymptotic_report(m: MomentSummary) -> AsymptoticReport:
    eps = epsilon_asymptotic(m)
    bound = epsilon_berry_esseen_bound(m)
    if m.sigma_f > 0.0:
        diss = dissipation_from_gap(m.delta_f, m.sigma_f)
    else:
        diss = 0.0
    return AsymptoticReport(
        x=m.x,
        epsilon_asymptotic=eps,
        epsilon_upper_bound=bound,
        dissipation_asymptotic=diss,
        regime=classify_regime(m),
    )

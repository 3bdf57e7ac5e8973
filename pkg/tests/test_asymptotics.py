import math

import numpy as np
import pytest

from thermodistill import (
    BERRY_ESSEEN_C_LOWER,
    BERRY_ESSEEN_C_UPPER,
    DistillationProblem,
    Ensemble,
    MomentSummary,
    Regime,
    Subsystem,
    TargetSpec,
    asymptotic_report,
    classify_regime,
    dissipation_asymptotic,
    dissipation_coefficient,
    dissipation_from_gap,
    ensemble_moments,
    epsilon_asymptotic,
    epsilon_berry_esseen_bound,
    exact_error,
    std_normal_cdf,
    std_normal_quantile,
)

from oracles import parts_to_ensemble, random_rational_qubit_ensemble


def _summary(f=1.0, sigma=1.0, kappa=0.0, delta=0.0, beta=1.0):
    return MomentSummary(f=f, sigma_f=sigma, kappa_f=kappa, beta=beta, delta_f=delta)


def test_normal_cdf_values():
    assert std_normal_cdf(0.0) == pytest.approx(0.5, abs=1e-15)
    assert std_normal_cdf(-1.0) == pytest.approx(0.15865525393145707, abs=1e-14)
    assert std_normal_cdf(6.0) == pytest.approx(1.0, abs=1e-9)


def test_quantile_roundtrip():
    assert std_normal_quantile(0.5) == pytest.approx(0.0, abs=1e-15)
    for p in np.concatenate([np.linspace(1e-6, 1 - 1e-6, 211), [0.3, 1e-10, 1 - 1e-12]]):
        assert std_normal_cdf(std_normal_quantile(float(p))) == pytest.approx(p, abs=1e-12)


def test_quantile_endpoints_rejected():
    for p in (0.0, 1.0, -0.1, 1.1):
        with pytest.raises(ValueError):
            std_normal_quantile(p)


def test_epsilon_asymptotic_cases():
    assert epsilon_asymptotic(_summary(delta=0.0)) == pytest.approx(0.5)
    assert epsilon_asymptotic(_summary(delta=1.0)) == pytest.approx(0.15865525393145707, abs=1e-12)
    assert epsilon_asymptotic(_summary(delta=100.0)) == pytest.approx(0.0, abs=1e-15)
    # degenerate fluctuation-free branches
    assert epsilon_asymptotic(_summary(sigma=0.0, delta=0.5)) == 0.0
    assert epsilon_asymptotic(_summary(sigma=0.0, delta=-0.5)) == 1.0
    with pytest.raises(ValueError):
        epsilon_asymptotic(_summary(sigma=0.0, delta=0.0))


def test_berry_esseen_bound_reduces_and_clamps():
    assert epsilon_berry_esseen_bound(_summary(kappa=0.0, delta=0.3)) == \
        pytest.approx(epsilon_asymptotic(_summary(delta=0.3)), abs=1e-15)
    # single skewed subsystem: bound exceeds one and is clamped
    sub = Subsystem.from_gibbs([0.6, 0.4], [0.9, 0.1])
    ens = Ensemble.copies(sub, 1)
    m = ensemble_moments(ens, TargetSpec(-ensemble_moments(ens).beta_f))
    assert epsilon_berry_esseen_bound(m) == 1.0
    assert BERRY_ESSEEN_C_LOWER < BERRY_ESSEEN_C_UPPER


def test_berry_esseen_dominates_exact(fig3_ensemble):
    m0 = ensemble_moments(fig3_ensemble)
    for x in (-2.0, -0.5, 0.0, 0.5, 2.0):
        t = TargetSpec(min(0.0, x * m0.beta_sigma_f - m0.beta_f))
        m = ensemble_moments(fig3_ensemble, t)
        eps = exact_error(DistillationProblem(fig3_ensemble, t))
        assert eps <= epsilon_berry_esseen_bound(m) + 1e-12


def test_berry_esseen_dominates_random_instances():
    rng = np.random.default_rng(13)
    for _ in range(60):
        parts, d_total = random_rational_qubit_ensemble(rng, max_subsystems=6, max_dim=2 ** 12)
        ens = parts_to_ensemble(parts)
        target_l = int(rng.integers(1, d_total + 1))
        t = TargetSpec(math.log(target_l) - math.log(d_total))
        m = ensemble_moments(ens, t)
        eps = exact_error(DistillationProblem(ens, t))
        if m.sigma_f == 0.0 and m.delta_f == 0.0:
            continue
        assert eps <= epsilon_berry_esseen_bound(m) + 1e-12


def test_dissipation_coefficient_values():
    assert dissipation_coefficient(0.5) == pytest.approx(1.0 / math.sqrt(2 * math.pi), abs=1e-12)
    assert dissipation_coefficient(1.0 - 1e-6) < 1e-4
    eps = std_normal_cdf(-1.0)
    expected = 1.0 * (1.0 - eps) + math.exp(-0.5) / math.sqrt(2 * math.pi)
    assert dissipation_coefficient(eps) == pytest.approx(expected, abs=1e-12)
    assert dissipation_coefficient(eps) == pytest.approx(1.0833, abs=2e-4)


def test_dissipation_coefficient_domain():
    for eps in (0.0, 1.0, -0.2, 1.3):
        with pytest.raises(ValueError):
            dissipation_coefficient(eps)


def test_dissipation_coefficient_strictly_decreasing():
    grid = np.linspace(1e-4, 1 - 1e-4, 10_000)
    vals = np.array([dissipation_coefficient(float(e)) for e in grid])
    assert np.all(np.diff(vals) < 0)


def test_dissipation_asymptotic_values():
    assert dissipation_asymptotic(_summary(sigma=1.0), 0.5) == \
        pytest.approx(0.3989422804014327, abs=1e-12)
    assert dissipation_from_gap(0.0, 2.0) == pytest.approx(2.0 / math.sqrt(2 * math.pi), abs=1e-12)


def test_gap_form_matches_coefficient_form():
    # a(eps)*sigma equals the gap-parameterized expression at eps = Phi(-x).
    rng = np.random.default_rng(31)
    for eps in np.concatenate([np.linspace(0.001, 0.999, 101), rng.uniform(0.01, 0.99, 50)]):
        sigma = float(rng.uniform(0.1, 10.0))
        delta = -std_normal_quantile(float(eps)) * sigma
        assert dissipation_coefficient(float(eps)) * sigma == \
            pytest.approx(dissipation_from_gap(delta, sigma), abs=1e-10 * max(1.0, sigma))


def test_classify_regime():
    assert classify_regime(_summary(delta=0.0)) is Regime.COMPARABLE
    assert classify_regime(_summary(delta=100.0)) is Regime.TARGET_MUCH_LOWER
    assert classify_regime(_summary(delta=-100.0)) is Regime.TARGET_MUCH_HIGHER
    assert classify_regime(_summary(delta=5.0)) is Regime.COMPARABLE


def test_epsilon_invariant_under_energy_rescaling():
    # Scaling all energies by c and beta by 1/c leaves x dimensionless.
    for c in (0.1, 3.7):
        a = Subsystem.incoherent([0.0, 1.0, 2.5], [0.5, 0.3, 0.2], beta=1.3)
        b = Subsystem.incoherent([0.0, c, 2.5 * c], [0.5, 0.3, 0.2], beta=1.3 / c)
        ens_a = Ensemble.copies(a, 20)
        ens_b = Ensemble.copies(b, 20)
        ta = TargetSpec(-0.8 * ensemble_moments(ens_a).beta_f)
        ma = ensemble_moments(ens_a, ta)
        mb = ensemble_moments(ens_b, ta)
        assert ma.x == pytest.approx(mb.x, abs=1e-11)
        assert epsilon_asymptotic(ma) == pytest.approx(epsilon_asymptotic(mb), abs=1e-12)


def test_asymptotic_report_fields(fig3_ensemble):
    m = ensemble_moments(fig3_ensemble, TargetSpec(-10.0))
    rep = asymptotic_report(m)
    assert rep.regime is Regime.COMPARABLE
    assert 0.0 <= rep.epsilon_asymptotic <= rep.epsilon_upper_bound <= 1.0
    assert rep.dissipation_asymptotic > 0.0

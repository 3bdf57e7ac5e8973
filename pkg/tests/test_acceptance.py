"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -s`` to see every verdict line.
Criteria micro-benchmark wall time where the contract demands it.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from thermodistill import (
    DistillationProblem,
    Ensemble,
    Subsystem,
    TargetSpec,
    build_atoms,
    dissipation_coefficient,
    dissipation_from_gap,
    ensemble_moments,
    erasure_cost,
    exact_error,
    exact_error_pure,
    hypothesis_testing_rel_entropy,
    hypothesis_testing_rel_entropy_product,
    hypothesis_testing_second_order,
    mc_hyperplane_probability,
    optimal_final_state_profile,
    pure_moments,
    rel_entropy,
    rel_entropy_skewness,
    rel_entropy_variance,
    std_normal_cdf,
    std_normal_quantile,
    thermal_variance_heat_capacity_check,
    epsilon_berry_esseen_bound,
)

from oracles import (
    brute_error,
    brute_final_state,
    parts_to_ensemble,
    product_embedding,
    random_rational_qubit_ensemble,
)

GOLDEN = Path(__file__).parent / "golden"

QUTRIT_ENERGIES = [0.0, 1.0, math.e]
QUTRIT_POPULATIONS = [0.45, 0.35, 0.2]
QUTRIT_X = 1.0


def _verdict(number: int, ok: bool, detail: str) -> bool:
    print(f"ACCEPTANCE criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}",
          flush=True)
    return ok


def _scaled_fig3(n: int) -> Ensemble:
    n1 = round(0.59 * n)
    g1 = Subsystem.from_gibbs([0.6, 0.4], [0.9, 0.1])
    g2 = Subsystem.from_gibbs([0.75, 0.25], [0.7, 0.3])
    return Ensemble.of((g1, n1), (g2, n - n1))


def test_criterion_1_oracle_equivalence():
    rng = np.random.default_rng(1001)
    start = time.monotonic()
    worst_eps = worst_diss = 0.0
    trials = 200
    for _ in range(trials):
        parts, d_total = random_rational_qubit_ensemble(rng, max_subsystems=12,
                                                        max_dim=2 ** 17)
        vec = product_embedding(parts)
        ens = parts_to_ensemble(parts)
        target_l = int(rng.integers(1, d_total + 1))
        t = TargetSpec(math.log(target_l) - math.log(d_total))
        prob = DistillationProblem(ens, t)
        prof = optimal_final_state_profile(prob)
        eps_b, _, diss_b = brute_final_state(vec, d_total, target_l)
        worst_eps = max(worst_eps, abs(prof.epsilon - eps_b))
        worst_diss = max(worst_diss, abs(prof.dissipated - diss_b))
    elapsed = time.monotonic() - start
    ok = worst_eps <= 1e-10 and worst_diss <= 1e-10 and elapsed < 120.0
    assert _verdict(1, ok, f"{trials} ensembles, worst |d eps|={worst_eps:.2e}, "
                           f"worst |d F_diss|={worst_diss:.2e}, {elapsed:.1f}s")
    assert worst_eps <= 1e-10 and worst_diss <= 1e-10
    assert elapsed < 120.0


def _random_large_ensemble(rng) -> Ensemble:
    n_groups = int(rng.choice([1, 2, 3], p=[0.45, 0.35, 0.2]))
    caps = {1: 1000, 2: 450, 3: 60}[n_groups]
    groups = []
    for _ in range(n_groups):
        count = int(rng.integers(1, caps + 1))
        a = float(rng.uniform(0.02, 0.98))
        g = float(rng.uniform(0.05, 0.95))
        groups.append((Subsystem.from_gibbs([g, 1 - g], [a, 1 - a]), count))
    return Ensemble(tuple(groups))


def test_criterion_2_berry_esseen_dominance():
    rng = np.random.default_rng(2002)
    violations = 0
    worst_margin = math.inf
    trials = 500
    for _ in range(trials):
        ens = _random_large_ensemble(rng)
        m0 = ensemble_moments(ens)
        if m0.sigma_f == 0.0:
            continue
        x = float(rng.uniform(-3.0, 3.0))
        t = TargetSpec(min(0.0, x * m0.beta_sigma_f - m0.beta_f))
        m = ensemble_moments(ens, t)
        eps = exact_error(DistillationProblem(ens, t))
        bound = epsilon_berry_esseen_bound(m)
        worst_margin = min(worst_margin, bound - eps)
        if eps > bound + 1e-12:
            violations += 1
    ok = violations == 0
    assert _verdict(2, ok, f"{trials} instances, violations={violations}, "
                           f"smallest bound margin={worst_margin:.3e}")
    assert violations == 0


def test_criterion_3_second_order_convergence():
    start = time.monotonic()
    grid = [16, 32, 64, 128, 256, 512, 1024]
    details = []
    all_ok = True
    for x in (-1.0, 0.0, 1.0):
        gaps = []
        for n in grid:
            ens = _scaled_fig3(n)
            m = ensemble_moments(ens)
            t = TargetSpec(min(0.0, x * m.beta_sigma_f - m.beta_f))
            eps = exact_error(DistillationProblem(ens, t))
            gaps.append(abs(eps - std_normal_cdf(-x)))
        decreasing = all(b < a for a, b in zip(gaps, gaps[1:]))
        slope = float(np.polyfit(np.log(grid), np.log(gaps), 1)[0])
        final_ok = gaps[-1] < 0.06
        all_ok &= decreasing and final_ok and -0.8 <= slope <= -0.2
        details.append(f"x={x:+.0f}: final gap={gaps[-1]:.4f} "
                       f"(<0.06: {final_ok}), slope={slope:.2f}, "
                       f"decreasing={decreasing}")
    elapsed = time.monotonic() - start
    all_ok &= elapsed < 60.0
    assert _verdict(3, all_ok, "; ".join(details) + f"; {elapsed:.1f}s")
    assert all_ok


def test_criterion_4_fluctuation_dissipation():
    sub = Subsystem.from_gibbs([0.6, 0.4], [0.7, 0.3])
    all_ok = True
    details = []
    for n in (256, 1024):
        ens = Ensemble.copies(sub, n)
        m = ensemble_moments(ens)
        band = 5.0 / math.sqrt(n)
        for eps in (0.1, 0.25, 0.5):
            log_gw = min(0.0, -m.beta_f - m.beta_sigma_f * std_normal_quantile(eps))
            prof = optimal_final_state_profile(
                DistillationProblem(ens, TargetSpec(log_gw)))
            ratio = prof.dissipated / (dissipation_coefficient(eps) * m.sigma_f)
            ok = 1.0 - band <= ratio <= 1.0 + band
            all_ok &= ok
            details.append(f"N={n} eps={eps}: ratio={ratio:.3f}")
    assert _verdict(4, all_ok, "; ".join(details))
    assert all_ok


def test_criterion_5_landauer_exact():
    all_ok = True
    worst = 0.0
    for n in (1, 10, 100):
        ens = Ensemble.copies(Subsystem.incoherent([0.0, 0.0], [0.5, 0.5]), n)
        for eps in (0.0, 0.5):
            got = erasure_cost(ens, eps).w_cost
            want = n * (math.log(2.0) - math.log1p(-eps) / n)
            worst = max(worst, abs(got - want))
            all_ok &= abs(got - want) <= 1e-12 * max(1.0, abs(want))
    assert _verdict(5, all_ok, f"max |deviation| = {worst:.2e}")
    assert all_ok


def test_criterion_6_pure_state_convergence_and_mc():
    psi = Subsystem.pure(QUTRIT_ENERGIES, QUTRIT_POPULATIONS, incommensurable=True)
    gaps = []
    for n in (8, 16, 32, 64):
        m = pure_moments(psi, n)
        t = TargetSpec(min(0.0, QUTRIT_X * m.beta_sigma_f - m.beta_f))
        eps = exact_error_pure(psi, n, t)
        gaps.append(abs(eps - std_normal_cdf(-QUTRIT_X)))
    monotone = all(b < a for a, b in zip(gaps, gaps[1:]))
    final_ok = gaps[-1] < 0.1

    n_mc = 10_000
    m = pure_moments(psi, n_mc)
    t = TargetSpec(min(0.0, QUTRIT_X * m.beta_sigma_f - m.beta_f))
    est, stderr = mc_hyperplane_probability(psi, t, n_mc, 100_000)
    mc_gap = abs(est - std_normal_cdf(QUTRIT_X))
    mc_ok = mc_gap < 3.0 * stderr + 0.01

    ok = monotone and final_ok and mc_ok
    assert _verdict(6, ok, f"gaps={[round(g, 4) for g in gaps]} (monotone={monotone}, "
                           f"final<0.1: {final_ok}); MC gap={mc_gap:.4f} "
                           f"vs 3se+0.01={3 * stderr + 0.01:.4f}")
    assert ok


def test_criterion_7_pure_dissipation_bound():
    from thermodistill import pure_final_state_profile

    psi = Subsystem.pure(QUTRIT_ENERGIES, QUTRIT_POPULATIONS, incommensurable=True)
    all_ok = True
    details = []
    for n in (8, 16, 32, 64):
        m = pure_moments(psi, n)
        t = TargetSpec(min(0.0, QUTRIT_X * m.beta_sigma_f - m.beta_f))
        prof = pure_final_state_profile(psi, n, t)
        eps = min(1.0 - 1e-12, max(1e-12, prof.epsilon))
        bound = dissipation_coefficient(eps) * m.sigma_f - 5.0 * m.sigma_f / math.sqrt(n)
        ok = prof.dissipated >= bound
        all_ok &= ok
        details.append(f"N={n}: diss={prof.dissipated:.3f} >= {bound:.3f}: {ok}")
    assert _verdict(7, all_ok, "; ".join(details))
    assert all_ok


def test_criterion_8_identities():
    a_half = dissipation_coefficient(0.5)
    ok_a = abs(a_half - 1.0 / math.sqrt(2.0 * math.pi)) <= 1e-12

    ok_comp = True
    for eps in np.linspace(0.001, 0.999, 499):
        sigma = 1.7
        delta = -std_normal_quantile(float(eps)) * sigma
        lhs = dissipation_coefficient(float(eps)) * sigma
        rhs = dissipation_from_gap(delta, sigma)
        ok_comp &= abs(lhs - rhs) <= 1e-10

    ok_heat = True
    for (t1, t2) in ((1.0, 2.0), (2.0, 1.0), (0.5, 0.8)):
        v, pred = thermal_variance_heat_capacity_check(np.array([0.0, 1.0]), t1, t2)
        ok_heat &= abs(v - pred) <= 1e-6 * max(abs(v), abs(pred))

    rng = np.random.default_rng(88)
    ok_embed = True
    for _ in range(20):
        den = int(rng.integers(2, 17))
        num = int(rng.integers(1, den))
        g = np.array([num / den, (den - num) / den])
        a = float(rng.uniform(0.05, 0.95))
        p = np.array([a, 1 - a])
        v_emb = np.repeat(p / np.array([num, den - num]), [num, den - num])
        h_hat = -math.fsum(v_emb * np.log(v_emb))
        ok_embed &= abs((math.log(den) - h_hat) - rel_entropy(p, g)) <= 1e-10
        mean = math.fsum(v_emb * -np.log(v_emb))
        v_hat = math.fsum(v_emb * (-np.log(v_emb) - mean) ** 2)
        y_hat = math.fsum(v_emb * np.abs(-np.log(v_emb) - mean) ** 3)
        ok_embed &= abs(v_hat - rel_entropy_variance(p, g)) <= 1e-10
        ok_embed &= abs(y_hat - rel_entropy_skewness(p, g)) <= 1e-10

    ok = ok_a and ok_comp and ok_heat and ok_embed
    assert _verdict(8, ok, f"a(1/2)={ok_a}, composition={ok_comp}, "
                           f"heat-capacity={ok_heat}, embedding={ok_embed}")
    assert ok


def test_criterion_9_hypothesis_testing():
    sub = Subsystem.from_gibbs([0.6, 0.4], [0.8, 0.2])
    ens = Ensemble.copies(sub, 200)
    worst = 0.0
    for eps in (0.1, 0.3, 0.5, 0.7, 0.9):
        dh = hypothesis_testing_rel_entropy_product(ens, eps)
        so = hypothesis_testing_second_order(ens, eps)
        worst = max(worst, abs(dh - so) / 200.0)
    ok_expansion = worst < 0.02

    rng = np.random.default_rng(99)
    ok_support = True
    for _ in range(25):
        g = rng.dirichlet(np.ones(6))
        p = rng.dirichlet(np.ones(6))
        p[rng.integers(0, 6)] = 0.0
        p /= p.sum()
        got = hypothesis_testing_rel_entropy(p, g, 0.0)
        ok_support &= abs(got - (-math.log(g[p > 0].sum()))) <= 1e-12

    ok = ok_expansion and ok_support
    assert _verdict(9, ok, f"max |DH/N - expansion/N| = {worst:.4f} (<0.02: "
                           f"{ok_expansion}); support identity={ok_support}")
    assert ok


def test_criterion_10_cli_regression(tmp_path):
    from thermodistill.cli import main

    start = time.monotonic()
    outputs = {}
    for preset in ("fig3", "fig4"):
        a = tmp_path / f"{preset}_a.csv"
        b = tmp_path / f"{preset}_b.csv"
        assert main(["run", "--config", preset, "--out", str(a)]) == 0
        assert main(["run", "--config", preset, "--out", str(b)]) == 0
        outputs[preset] = (a.read_bytes() == b.read_bytes(),
                           a.read_bytes() == (GOLDEN / f"{preset}.csv").read_bytes())
    elapsed = time.monotonic() - start
    deterministic = all(v[0] for v in outputs.values())
    golden = all(v[1] for v in outputs.values())
    ok = deterministic and golden and elapsed < 60.0
    assert _verdict(10, ok, f"deterministic={deterministic}, golden match={golden}, "
                            f"{elapsed:.1f}s")
    assert ok

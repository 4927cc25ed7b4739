import math

import numpy as np
import pytest
from hypothesis import given, settings

from keybounds import privacy
from keybounds.channels import depolarizing
from keybounds.divergences import fidelity
from keybounds.randomized import random_biseparable, random_density, random_private_state
from keybounds.states import (
    BisepCandidate,
    bisep_ghz,
    bisep_w,
    family_candidate,
    family_state,
    ghz_state,
    merge_parties,
    private_state,
)
from keybounds.tensor_core import DensityOperator, SubsystemLayout

from conftest import seeds


def _trivial_bundle(k, m, shield_dim=2, pure=False):
    ds = shield_dim**m
    shield = np.diag(np.eye(ds)[0]) if pure else np.eye(ds) / ds
    omega = DensityOperator(shield, SubsystemLayout.of((shield_dim,) * m))
    return private_state(k, m, [np.eye(ds)] * k**m, omega)


def test_trivial_twisting_projector():
    b = _trivial_bundle(2, 3)
    t = privacy.privacy_test(b)
    ghz = ghz_state(3, 2).density().matrix
    assert np.allclose(t.projector.matrix, np.kron(ghz, np.eye(8)), atol=1e-12)


@pytest.mark.parametrize("k,m,sd", [(2, 2, 2), (2, 3, 2), (3, 2, 2), (4, 2, 1)])
def test_projector_rank_and_idempotence(k, m, sd, rng):
    b = random_private_state(k, m, sd, rng)
    t = privacy.privacy_test(b)
    p = t.projector.matrix
    assert np.max(np.abs(p @ p - p)) < 1e-9
    assert t.rank == sd**m
    assert privacy.test_success(t, b.gamma) == pytest.approx(1.0, abs=1e-9)


def test_ghz_candidate_against_ghz_test():
    # qubit shields are absent here: the plain GHZ test on three qubits
    proj = ghz_state(3, 2).density()
    t = privacy.PrivacyTest(proj, 2, (0, 1, 2), ())
    val = privacy.test_success(t, bisep_ghz(1, 3).state)
    assert val == pytest.approx(0.25, abs=1e-12)
    assert val <= 0.5


def test_success_dimension_mismatch():
    t = privacy.privacy_test(_trivial_bundle(2, 2))
    with pytest.raises(ValueError):
        privacy.test_success(t, np.eye(4) / 4)


CEILING_CASES = [(2, 2, 2), (2, 3, 2), (3, 2, 2), (3, 3, 1), (4, 2, 2), (4, 2, 1)]


def test_biseparable_ceiling_random():
    rng = np.random.default_rng(7)
    worst = -math.inf
    for trial in range(200):
        k, m, sd = CEILING_CASES[trial % len(CEILING_CASES)]
        b = random_private_state(k, m, sd, rng)
        t = privacy.privacy_test(b)
        sigma = random_biseparable(k, m, sd, rng)
        val = privacy.test_success(t, sigma)
        worst = max(worst, val - 1 / k)
        assert val <= 1 / k + 1e-9
    assert worst < 1e-9


@pytest.mark.parametrize("k", [2, 3, 4])
def test_ceiling_is_attained_by_classical_key(k):
    b = _trivial_bundle(k, 2, 1)
    t = privacy.privacy_test(b)
    # classically correlated key strings: a separable state
    diag = np.zeros(k * k)
    diag[[a * k + a for a in range(k)]] = 1 / k
    assert privacy.test_success(t, np.diag(diag)) == pytest.approx(1 / k, abs=1e-12)


@given(seed=seeds)
@settings(max_examples=30)
def test_perturbed_private_state_passes(seed):
    rng = np.random.default_rng(seed)
    b = random_private_state(2, 2, 2, rng)
    t = privacy.privacy_test(b)
    mix = rng.uniform(0, 0.3)
    rho = (1 - mix) * b.gamma.matrix + mix * random_density(b.gamma.dim, rng)
    eps = 1 - fidelity(rho, b.gamma)
    assert privacy.test_success(t, rho) >= 1 - eps - 1e-9


def test_epsilon_approx_check():
    b = _trivial_bundle(2, 2)
    g = b.gamma
    assert privacy.epsilon_approx_check(g, g, 0.0)
    ket = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    assert not privacy.epsilon_approx_check(ket[0], ket[1], 0.5)
    g = _trivial_bundle(2, 2, pure=True).gamma
    # a pure state under global depolarisation has F = 1 - p + p/d
    p, d = 0.2, g.dim
    rho = (1 - p) * g.matrix + p * np.eye(d) / d
    f = 1 - p + p / d
    assert privacy.epsilon_approx_check(rho, g, 1 - f + 1e-9)
    assert not privacy.epsilon_approx_check(rho, g, 1 - f - 1e-9)


@pytest.mark.parametrize(
    "m,n,expected",
    [(3, 1, math.log2(3 / 2)), (3, 2, math.log2(9 / 4)), (6, 1, math.log2(6 / 5))],
)
def test_w_bounds_at_zero_eps(m, n, expected):
    rho = family_state("w", m, n)
    val = privacy.one_shot_key_upper_bound(rho, bisep_w(n, m), 0.0)
    assert val == pytest.approx(expected, abs=1e-9)


def test_ghz_classical_candidate():
    rho = family_state("ghz", 3)
    cand = family_candidate("ghz", 3, 1, "classical")
    assert privacy.one_shot_key_upper_bound(rho, cand, 0.0) == pytest.approx(1.0, abs=1e-9)
    assert 1.0 <= privacy.one_shot_key_upper_bound(rho, cand, 0.001) <= 1.1


def test_bound_monotone_in_eps():
    rho = family_state("w", 3)
    cand = bisep_w(1, 3)
    curve = privacy.key_bound_curve(rho, cand, np.linspace(0, 0.5, 21))
    vals = [r.value_bits for r in curve]
    assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))
    assert all(r.gap_bits <= 1e-6 for r in curve)


def test_unattested_candidate_rejected():
    rho = family_state("w", 3)
    with pytest.raises(ValueError):
        privacy.key_bound(rho, rho, 0.1)
    assert privacy.key_bound(rho, bisep_w(1, 3).state, 0.1, attested=True).value_bits > 0


def test_merge_invariance():
    rho = family_state("w", 3)
    sigma = bisep_w(1, 3).state
    before = privacy.key_bound(rho, BisepCandidate(sigma, "w", 1, 3, ()), 0.01).value_bits
    labels = rho.layout.labels
    r2 = merge_parties(rho, labels[0], labels[1])
    s2 = merge_parties(sigma.with_layout(rho.layout), labels[0], labels[1])
    after = privacy.key_bound(r2, s2, 0.01, attested=True).value_bits
    assert after == before


def test_noisy_bound_below_noiseless():
    from keybounds.states import apply_local_noise

    rho = family_state("w", 3)
    sigma = bisep_w(1, 3).state.with_layout(rho.layout)
    ch = depolarizing(0.95)
    for eps in (0.001, 0.01, 0.1):
        clean = privacy.key_bound(rho, sigma, eps, attested=True).value_bits
        noisy = privacy.key_bound(apply_local_noise(rho, ch), apply_local_noise(sigma, ch), eps, attested=True)
        assert noisy.value_bits < clean

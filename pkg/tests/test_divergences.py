import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from keybounds.channels import apply
from keybounds.divergences import (
    INF,
    binary_entropy,
    cond_mutual_info,
    fidelity,
    hyp_bound_from_fidelity,
    hyp_bound_from_trace_distance,
    hyp_exact_eigenvector,
    hypothesis_testing,
    knapsack_hyp,
    max_relative_entropy,
    relative_entropy,
    sandwiched_renyi,
    trace_distance,
    von_neumann_entropy,
)
from keybounds.randomized import random_builtin_channel, random_density, random_pure, random_unitary
from keybounds.states import bisep_ghz, ghz_state
from keybounds.tensor_core import DensityOperator

from conftest import seeds

KET0 = np.diag([1.0, 0.0])
KET1 = np.diag([0.0, 1.0])
MIXED = np.eye(2) / 2


def random_pair(rng, dims=(2, 3, 4)):
    d = int(rng.choice(dims))
    return (
        random_density(d, rng, int(rng.integers(1, d + 1))),
        random_density(d, rng, int(rng.integers(1, d + 1))),
    )


def full_rank_pair(rng, d=3):
    return random_density(d, rng), random_density(d, rng)


# closed-form examples


def test_fidelity_examples(rng):
    rho = random_density(3, rng)
    assert abs(fidelity(rho, rho) - 1) < 1e-9
    assert fidelity(KET0, KET1) == 0
    assert abs(fidelity(KET0, MIXED) - 0.5) < 1e-12
    with pytest.raises(ValueError):
        fidelity(KET0, np.eye(3) / 3)


def test_trace_distance_examples(rng):
    rho = random_density(3, rng)
    assert trace_distance(rho, rho) < 1e-12
    assert abs(trace_distance(KET0, KET1) - 1) < 1e-12
    assert abs(trace_distance(np.diag([0.7, 0.3]), MIXED) - 0.2) < 1e-12


def test_relative_entropy_examples(rng):
    rho = random_density(3, rng)
    assert abs(relative_entropy(rho, rho)) < 1e-9
    assert abs(relative_entropy(KET0, MIXED) - 1) < 1e-12
    assert relative_entropy(KET0, KET1) == INF


def test_max_relative_entropy_examples(rng):
    rho = random_density(3, rng)
    assert abs(max_relative_entropy(rho, rho)) < 1e-9
    assert abs(max_relative_entropy(KET0, MIXED) - 1) < 1e-12
    assert abs(max_relative_entropy(np.diag([0.9, 0.1]), MIXED) - math.log2(1.8)) < 1e-12
    assert max_relative_entropy(KET0, KET1) == INF


def test_sandwiched_renyi_examples(rng):
    rho, sigma = full_rank_pair(rng)
    for a in (0.3, 0.5, 2.0, 7.0):
        assert abs(sandwiched_renyi(rho, rho, a)) < 1e-9
    assert abs(sandwiched_renyi(rho, sigma, 0.5) + math.log2(fidelity(rho, sigma))) < 1e-9
    assert sandwiched_renyi(KET0, KET1, 2.0) == INF
    with pytest.raises(ValueError):
        sandwiched_renyi(rho, sigma, 1.0)
    with pytest.raises(ValueError):
        sandwiched_renyi(rho, sigma, 0.0)


@given(seeds)
def test_renyi_limit_is_relative_entropy(seed):
    rho, sigma = full_rank_pair(np.random.default_rng(seed))
    d = relative_entropy(rho, sigma)
    for a in (1 - 1e-6, 1 + 1e-6):
        assert abs(sandwiched_renyi(rho, sigma, a) - d) < 1e-4


@given(seeds)
def test_renyi_monotone_in_alpha(seed):
    rho, sigma = full_rank_pair(np.random.default_rng(seed))
    vals = [sandwiched_renyi(rho, sigma, a) for a in (0.6, 0.9, 1.1, 2, 5, 50)]
    assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))


def test_binary_entropy_values():
    assert binary_entropy(0) == 0 and binary_entropy(1) == 0
    assert binary_entropy(0.5) == 1
    assert abs(binary_entropy(1 / 3) - 0.918296) < 1e-6
    with pytest.raises(ValueError):
        binary_entropy(1.5)


def test_entropies():
    assert von_neumann_entropy(KET0) < 1e-12
    assert abs(von_neumann_entropy(MIXED) - 1) < 1e-12
    corr = np.zeros((8, 8))
    corr[0, 0] = corr[6, 6] = 0.5  # |00>|0> and |11>|0>
    rho = DensityOperator(corr, (2, 2, 2))
    assert abs(cond_mutual_info(rho, [0], [1], [2]) - 1) < 1e-12
    with pytest.raises(ValueError):
        cond_mutual_info(rho, [0], [0, 1])


# hypothesis testing


def test_hyp_knapsack_example():
    res = hypothesis_testing(MIXED, np.diag([0.9, 0.1]), 0.25)
    assert abs(res.primal - 0.55) < 1e-12
    assert abs(res.value_bits + math.log2(0.55)) < 1e-9
    assert abs(knapsack_hyp([0.5, 0.5], [0.9, 0.1], 0.25) - 0.55) < 1e-12


def test_hyp_ghz_coherent_candidate_is_two_bits():
    res = hypothesis_testing(ghz_state(3).density(), bisep_ghz(1, 3).state, 0.0)
    assert abs(res.value_bits - 2) < 1e-9


def test_hyp_pure_eps0_is_overlap(rng):
    psi = random_pure(4, rng)
    sigma = random_density(4, rng)
    res = hypothesis_testing(np.outer(psi, psi.conj()), sigma, 0.0)
    assert abs(res.value_bits + math.log2(np.real(psi.conj() @ sigma @ psi))) < 1e-9


@pytest.mark.parametrize("eps", [0.0, 0.1, 0.5, 0.9])
def test_hyp_pure_eigenvector_closed_form(eps, rng):
    for _ in range(10):
        d = 4
        u = random_unitary(d, rng)
        p = rng.dirichlet(np.ones(d))
        sigma = (u * p) @ u.conj().T
        rho = np.outer(u[:, 0], u[:, 0].conj())
        res = hypothesis_testing(rho, sigma, eps)
        assert abs(res.value_bits - hyp_exact_eigenvector(p[0], eps)) < 1e-8


def test_hyp_infinite_when_supports_disjoint():
    assert hypothesis_testing(KET0, KET1, 0.2).value_bits == INF
    # more than 1 - eps of rho lies outside supp(sigma)
    rho = np.diag([0.6, 0.4, 0.0])
    assert hypothesis_testing(rho, np.diag([0, 0.5, 0.5]), 0.45).value_bits == INF


def test_hyp_rejects_bad_eps():
    with pytest.raises(ValueError):
        hypothesis_testing(KET0, MIXED, 1.0)


@given(seeds, st.floats(0, 0.99))
def test_hyp_certificate_and_test_operator(seed, eps):
    rng = np.random.default_rng(seed)
    rho, sigma = random_pair(rng, (2, 3, 4, 6))
    res = hypothesis_testing(rho, sigma, eps)
    assert res.gap_bits <= 1e-6
    lam = res.test_operator.matrix
    w = np.linalg.eigvalsh(lam)
    assert w[0] >= -1e-9 and w[-1] <= 1 + 1e-9
    assert np.real(np.trace(lam @ rho)) >= 1 - eps - 1e-9


@given(seeds)
def test_hyp_matches_knapsack_on_commuting_pairs(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 6))
    u = random_unitary(d, rng)
    p, q = rng.dirichlet(np.ones(d)), rng.dirichlet(np.ones(d))
    eps = float(rng.uniform(0, 0.95))
    res = hypothesis_testing((u * p) @ u.conj().T, (u * q) @ u.conj().T, eps)
    assert abs(res.primal - knapsack_hyp(p, q, eps)) < 1e-8


@given(seeds)
def test_hyp_monotone_in_eps(seed):
    rho, sigma = random_pair(np.random.default_rng(seed))
    vals = [hypothesis_testing(rho, sigma, e).value_bits for e in np.linspace(0, 0.95, 12)]
    assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))


@settings(max_examples=60)
@given(seeds, st.floats(0, 0.95))
def test_hyp_fidelity_and_trace_distance_bounds(seed, eps):
    rho, sigma = random_pair(np.random.default_rng(seed))
    res = hypothesis_testing(rho, sigma, eps)
    v = res.value_bits
    # near eps = 0 the value is ill-conditioned; the certified gap bounds the error
    slack = res.gap_bits + 1e-9
    f, t = fidelity(rho, sigma), trace_distance(rho, sigma)
    if eps < f:
        tight = hyp_bound_from_fidelity(f, eps)
        assert v <= tight + slack
        assert tight <= hyp_bound_from_fidelity(f, eps, loose=True) + 1e-12
    if eps < 1 - t:
        assert v <= hyp_bound_from_trace_distance(t, eps) + slack


@given(seeds, st.floats(0.01, 0.95))
def test_hyp_renyi_and_relative_entropy_chains(seed, eps):
    rho, sigma = full_rank_pair(np.random.default_rng(seed))
    v = hypothesis_testing(rho, sigma, eps).value_bits
    for a in (1.5, 2, 10):
        assert v <= sandwiched_renyi(rho, sigma, a) + a / (a - 1) * math.log2(1 / (1 - eps)) + 1e-9
    assert v <= (relative_entropy(rho, sigma) + binary_entropy(eps)) / (1 - eps) + 1e-9


@given(seeds, st.floats(0, 0.95))
def test_data_processing(seed, eps):
    rng = np.random.default_rng(seed)
    rho = DensityOperator(random_density(4, rng), (2, 2))
    sigma = DensityOperator(random_density(4, rng), (2, 2))
    ch = random_builtin_channel(rng)
    nr, ns = apply(ch, rho, [0]), apply(ch, sigma, [0])
    assert hypothesis_testing(rho, sigma, eps).value_bits >= hypothesis_testing(nr, ns, eps).value_bits - 1e-8
    assert relative_entropy(rho, sigma) >= relative_entropy(nr, ns) - 1e-8
    assert max_relative_entropy(rho, sigma) >= max_relative_entropy(nr, ns) - 1e-8
    for a in (0.5, 1.5, 3.0):
        assert sandwiched_renyi(rho, sigma, a) >= sandwiched_renyi(nr, ns, a) - 1e-8


def test_fidelity_bound_examples():
    assert hyp_bound_from_fidelity(1.0, 0.0) == 0
    assert abs(hyp_bound_from_fidelity(1.0, 0.25) + 2 * math.log2(1 - 0.5 * math.sqrt(0.75))) < 1e-12
    with pytest.raises(ValueError):
        hyp_bound_from_fidelity(0.5, 0.6)


def test_trace_distance_bound_examples():
    assert hyp_bound_from_trace_distance(0.0, 0.0) == 0
    assert abs(hyp_bound_from_trace_distance(0.3, 0.2) - 1) < 1e-12
    with pytest.raises(ValueError):
        hyp_bound_from_trace_distance(0.5, 0.5)

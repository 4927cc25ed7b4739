"""Privacy tests and one-shot key upper bounds from biseparable candidates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .divergences import HypTestResult, fidelity, hypothesis_testing
from .states import BisepCandidate, PrivateStateBundle, ghz_state
from .tensor_core import DensityOperator, HermitianOperator, as_matrix

FIDELITY_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class PrivacyTest:
    projector: HermitianOperator
    key_dim: int
    key_slots: tuple[int, ...]
    shield_slots: tuple[int, ...]

    @property
    def rank(self) -> int:
        return int(round(np.real(np.trace(self.projector.matrix))))


def privacy_test(bundle: PrivateStateBundle) -> PrivacyTest:
    """Projector U (Phi^GHZ (x) I_S) U^dagger for the bundle's twisting."""
    ghz = ghz_state(bundle.num_parties, bundle.key_dim).density().matrix
    base = np.kron(ghz, np.eye(bundle.shield_dim))
    u = bundle.twisting
    proj = u @ base @ u.conj().T
    proj = 0.5 * (proj + proj.conj().T)
    return PrivacyTest(
        HermitianOperator(proj, bundle.gamma.layout),
        bundle.key_dim,
        tuple(bundle.key_slots),
        tuple(bundle.shield_slots),
    )


def test_success(test: PrivacyTest, rho) -> float:
    m = as_matrix(rho)
    if m.shape != test.projector.matrix.shape:
        raise ValueError(f"state dimension {m.shape[0]} does not match test dimension {test.projector.dim}")
    return float(np.real(np.trace(test.projector.matrix @ m)))


def epsilon_approx_check(rho, gamma, eps: float) -> bool:
    """True iff rho is an eps-approximate version of gamma, i.e. F(rho, gamma) >= 1 - eps.

    A slack of ``FIDELITY_SLACK`` absorbs rounding so that ``(gamma, gamma, 0)`` passes.
    """
    return fidelity(rho, gamma) >= 1 - eps - FIDELITY_SLACK


def _candidate_state(candidate, attested: bool) -> DensityOperator:
    if isinstance(candidate, BisepCandidate):
        return candidate.state
    if attested:
        return candidate
    raise ValueError(
        "candidate must be a BisepCandidate or be passed with attested=True "
        "(biseparability is not checked for arbitrary states)"
    )


def key_bound(rho, candidate, eps: float, attested: bool = False) -> HypTestResult:
    """Certified D_h^eps(rho || candidate): an upper bound on one-shot conference key."""
    sigma = _candidate_state(candidate, attested)
    return hypothesis_testing(rho, sigma, eps)


def one_shot_key_upper_bound(rho, candidate, eps: float, attested: bool = False) -> float:
    return key_bound(rho, candidate, eps, attested).value_bits


def key_bound_curve(rho, candidate, eps_grid: Iterable[float], attested: bool = False) -> list[HypTestResult]:
    sigma = _candidate_state(candidate, attested)
    return [hypothesis_testing(rho, sigma, float(e)) for e in eps_grid]

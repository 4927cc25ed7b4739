"""Random ensembles used by the property suites and the CLI's seeded corpora."""

from __future__ import annotations

import itertools

import numpy as np
from scipy.stats import unitary_group

from .channels import KrausChannel, dephasing, depolarizing, erasure_channel, identity_channel
from .states import PrivateStateBundle, private_state
from .tensor_core import DensityOperator, SubsystemLayout, permutation_unitary


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Ginibre-distributed density matrix of the given rank."""
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    m = g @ g.conj().T
    return m / np.trace(m).real


def random_pure(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    if d == 1:
        return np.ones((1, 1), dtype=complex)
    return unitary_group.rvs(d, random_state=rng)


def random_diagonal_pair(d: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Two commuting states, both diagonal in a shared random basis; returns (p, q)."""
    p = rng.dirichlet(np.ones(d))
    q = rng.dirichlet(np.ones(d))
    # sprinkle exact zeros so support edge cases are exercised
    if rng.random() < 0.3:
        q[rng.integers(d)] = 0.0
        q /= q.sum()
    return p, q


def random_builtin_channel(rng: np.random.Generator) -> KrausChannel:
    """A random qubit-to-qubit channel from the built-in families."""
    kind = rng.integers(3)
    if kind == 0:
        return depolarizing(float(rng.uniform(-1 / 3, 1)))
    if kind == 1:
        return dephasing(float(rng.uniform(0, 1)))
    return identity_channel(2)


def random_erasure(rng: np.random.Generator) -> KrausChannel:
    return erasure_channel(float(rng.uniform(0, 1)))


def random_private_state(k: int, m: int, shield_dim: int, rng: np.random.Generator) -> PrivateStateBundle:
    """Private state with Haar-random twisting blocks and a random shield state.

    The shield is ``m`` slots of ``shield_dim`` each (one per party).
    """
    ds = shield_dim**m
    omega = DensityOperator(random_density(ds, rng), SubsystemLayout((shield_dim,) * m, tuple(f"S{j + 1}" for j in range(m))))
    blocks = [random_unitary(ds, rng) for _ in itertools.product(range(k), repeat=m)]
    return private_state(k, m, blocks, omega)


def random_biseparable(
    k: int, m: int, shield_dim: int, rng: np.random.Generator, terms: int = 3
) -> np.ndarray:
    """Random mixture of states that are product across random party cuts.

    Party ``i`` owns key slot ``i`` and shield slot ``m + i``; the returned
    matrix uses the key-first ordering of :func:`random_private_state`.
    """
    local = k * shield_dim
    total = local**m
    out = np.zeros((total, total), dtype=complex)
    weights = rng.dirichlet(np.ones(terms))
    for w in weights:
        size = int(rng.integers(1, m))
        group = sorted(rng.choice(m, size=size, replace=False).tolist())
        rest = [i for i in range(m) if i not in group]
        a = random_density(local ** len(group), rng, rank=int(rng.integers(1, 3)))
        b = random_density(local ** len(rest), rng, rank=int(rng.integers(1, 3)))
        # party-major ordering (K_i S_i per party, parties in group-then-rest order)
        party_order = group + rest
        prod = np.kron(a, b)
        # slots in party-major order: (K_p, S_p) for p in party_order
        # target: K_0..K_{m-1}, S_0..S_{m-1}
        src_slots = [(kind, p) for p in party_order for kind in ("K", "S")]
        target = [("K", i) for i in range(m)] + [("S", i) for i in range(m)]
        perm = [src_slots.index(t) for t in target]
        dims = [k if kind == "K" else shield_dim for kind, _ in src_slots]
        p = permutation_unitary(dims, perm)
        out += w * (p @ prod @ p.T)
    return 0.5 * (out + out.conj().T)


"""Named multipartite states and the biseparable candidate families."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .channels import KrausChannel, apply
from .tensor_core import (
    HERM_TOL,
    DensityOperator,
    MergeRecord,
    StateVector,
    SubsystemLayout,
    kron,
    permute_subsystems,
    tensor_power,
)


def _party_layout(m: int, d: int, prefix: str = "A") -> SubsystemLayout:
    return SubsystemLayout.of([d] * m, prefix=prefix)


def ghz_state(m: int, d: int = 2) -> StateVector:
    if m < 2 or d < 2:
        raise ValueError("GHZ state needs M >= 2 parties and local dimension d >= 2")
    v = np.zeros(d**m, dtype=complex)
    step = sum(d**k for k in range(m))  # index of |k...k> is k*step
    v[np.arange(d) * step] = 1 / np.sqrt(d)
    return StateVector(v, _party_layout(m, d))


def w_state(m: int) -> StateVector:
    if m < 2:
        raise ValueError("W state needs M >= 2 parties")
    v = np.zeros(2**m, dtype=complex)
    v[[2**k for k in range(m)]] = 1 / np.sqrt(m)
    return StateVector(v, _party_layout(m, 2))


def bell_state(name: str = "phi+") -> StateVector:
    from .channels import BELL_BASIS, BELL_NAMES

    try:
        row = BELL_NAMES.index(name)
    except ValueError:
        raise ValueError(f"unknown Bell state {name!r}; expected one of {BELL_NAMES}") from None
    return StateVector(BELL_BASIS[row], SubsystemLayout((2, 2), ("A", "B")))


def ghz_projector_classical(k: int, m: int) -> np.ndarray:
    """(1/K) sum_k |k..k><k..k|, the computational-basis dephasing of Phi^GHZ."""
    step = sum(k**j for j in range(m))
    p = np.zeros((k**m, k**m))
    for a in range(k):
        p[a * step, a * step] = 1 / k
    return p


def conference_key_state(k: int, m: int, sigma_e: DensityOperator | None = None) -> DensityOperator:
    if k < 2:
        raise ValueError("key dimension must be at least 2")
    key = DensityOperator(ghz_projector_classical(k, m), _party_layout(m, k, "K"), check=False)
    if sigma_e is None:
        return key
    return kron(key, sigma_e.with_layout(SubsystemLayout(sigma_e.dims, _e_labels(sigma_e))))


def _e_labels(sigma_e) -> tuple[str, ...]:
    n = len(sigma_e.dims)
    return ("E",) if n == 1 else tuple(f"E{j + 1}" for j in range(n))


@dataclass(frozen=True, eq=False)
class PrivateStateBundle:
    gamma: DensityOperator
    twisting: np.ndarray
    key_dim: int
    num_parties: int
    omega: DensityOperator

    @property
    def key_slots(self) -> list[int]:
        return list(range(self.num_parties))

    @property
    def shield_slots(self) -> list[int]:
        return list(range(self.num_parties, len(self.gamma.dims)))

    @property
    def shield_dim(self) -> int:
        return self.omega.dim


def _is_unitary(u: np.ndarray) -> bool:
    return u.shape[0] == u.shape[1] and np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= HERM_TOL


def twisting_unitary(k: int, m: int, unitaries: Sequence[np.ndarray]) -> np.ndarray:
    """Sum_k |k><k| (x) U^k with key strings in lexicographic order."""
    blocks = [np.asarray(u, dtype=complex) for u in unitaries]
    ds = blocks[0].shape[0]
    out = np.zeros((k**m * ds, k**m * ds), dtype=complex)
    for idx, u in enumerate(blocks):
        out[idx * ds : (idx + 1) * ds, idx * ds : (idx + 1) * ds] = u
    return out


def private_state(
    k: int,
    m: int,
    shield_unitaries: Sequence[np.ndarray] | Mapping[tuple, np.ndarray] | Callable[[tuple], np.ndarray],
    omega: DensityOperator,
) -> PrivateStateBundle:
    """Twisted GHZ state ``U (Phi^GHZ_K (x) omega) U^dagger``.

    ``shield_unitaries`` is a list with one entry per key string (lexicographic
    order), a mapping keyed by key-string tuples, or a callable rule.
    """
    strings = list(itertools.product(range(k), repeat=m))
    if callable(shield_unitaries):
        blocks = [shield_unitaries(s) for s in strings]
    elif isinstance(shield_unitaries, Mapping):
        missing = [s for s in strings if s not in shield_unitaries]
        if missing:
            raise ValueError(f"missing shield unitaries for key strings {missing[:3]}")
        blocks = [shield_unitaries[s] for s in strings]
    else:
        blocks = list(shield_unitaries)
        if len(blocks) != len(strings):
            raise ValueError(f"expected {len(strings)} shield unitaries, got {len(blocks)}")
    blocks = [np.asarray(u, dtype=complex) for u in blocks]
    for s, u in zip(strings, blocks):
        if u.shape != (omega.dim, omega.dim) or not _is_unitary(u):
            raise ValueError(f"shield operator for key string {s} is not a {omega.dim}-dim unitary")
    u_tw = twisting_unitary(k, m, blocks)
    ghz = ghz_state(m, k).density().with_layout(_party_layout(m, k, "K"))
    shield = omega.with_layout(SubsystemLayout(omega.dims, tuple(f"S{j + 1}" for j in range(len(omega.dims)))))
    base = kron(ghz, shield)
    g = u_tw @ base.matrix @ u_tw.conj().T
    gamma = DensityOperator(0.5 * (g + g.conj().T), base.layout)
    return PrivateStateBundle(gamma, u_tw, k, m, shield)


# biseparable candidates


@dataclass(frozen=True, eq=False)
class BisepCandidate:
    state: DensityOperator
    family: str
    copies: int
    parties: int
    cut_witnesses: tuple[tuple[int, int], ...]


GHZ_VARIANTS = ("coherent", "classical")


def _swap_first(m: int, i: int) -> list[int]:
    """Permutation exchanging party 0 and party i (0-based)."""
    perm = list(range(m))
    perm[0], perm[i] = perm[i], perm[0]
    return perm


def _symmetrized_power(block: DensityOperator, n: int, m: int) -> DensityOperator:
    acc = np.zeros((2 ** (m * n),) * 2, dtype=complex)
    for i in range(m):
        term = permute_subsystems(block, _swap_first(m, i))
        acc += tensor_power(term, n).matrix
    layout = tensor_power(block, n).layout
    return DensityOperator(acc / m, layout)


def bisep_ghz(n: int, m: int, variant: str = "coherent") -> BisepCandidate:
    """Biseparable GHZ candidate.

    ``coherent``: party i maximally mixed, the other M-1 parties in GHZ, mixed
    uniformly over i and raised to n copies term-wise.
    ``classical``: the fully dephased GHZ_M state (1/2)(|0..0><0..0| + |1..1><1..1|)
    to the n-th power; it is separable across every cut.
    """
    _check_family_args(n, m)
    if variant not in GHZ_VARIANTS:
        raise ValueError(f"unknown GHZ candidate variant {variant!r}; expected one of {GHZ_VARIANTS}")
    layout = _party_layout(m, 2)
    if variant == "coherent":
        rest = ghz_state(m - 1).density()
        block = kron(DensityOperator(np.eye(2) / 2), rest).with_layout(layout)
        state = _symmetrized_power(block, n, m)
    else:
        block = DensityOperator(ghz_projector_classical(2, m), layout, check=False)
        state = tensor_power(block, n)
        state = DensityOperator(state.matrix, state.layout)
    tag = f"ghz-{variant}"
    return BisepCandidate(state, tag, n, m, tuple((i, i) for i in range(m)))


def bisep_w(n: int, m: int) -> BisepCandidate:
    _check_family_args(n, m)
    zero = DensityOperator(np.diag([1.0, 0.0]))
    block = kron(zero, w_state(m - 1).density()).with_layout(_party_layout(m, 2))
    state = _symmetrized_power(block, n, m)
    return BisepCandidate(state, "w", n, m, tuple((i, i) for i in range(m)))


def _check_family_args(n: int, m: int):
    if n < 1:
        raise ValueError("copies must be at least 1")
    if m < 3:
        raise ValueError("biseparable candidate families need M >= 3 parties")


def family_state(family: str, m: int, n: int = 1) -> DensityOperator:
    """Target state Phi_M^family to the n-th power (GHZ or W on qubits)."""
    if family == "ghz":
        psi = ghz_state(m)
    elif family == "w":
        psi = w_state(m)
    else:
        raise ValueError(f"unknown state family {family!r}")
    return tensor_power(psi, n).density()


def family_candidate(family: str, m: int, n: int = 1, ghz_variant: str = "coherent") -> BisepCandidate:
    if family == "ghz":
        return bisep_ghz(n, m, ghz_variant)
    if family == "w":
        return bisep_w(n, m)
    raise ValueError(f"unknown state family {family!r}")


# noise and party bookkeeping


def apply_local_noise(rho: DensityOperator, noise: KrausChannel) -> DensityOperator:
    """Apply the same single-qubit channel independently to every slot."""
    if noise.d_in != 2 or noise.d_out != 2:
        raise ValueError("local noise must be a qubit-to-qubit channel")
    if any(d != 2 for d in rho.dims):
        raise ValueError(f"local noise needs every subsystem to be a qubit, got dims {rho.dims}")
    out = rho
    for k in range(len(rho.dims)):
        out = apply(noise, out, [k])
    return DensityOperator(out.matrix, rho.layout)


def merge_parties(rho, i: str, j: str):
    """Group the slots of parties ``i`` and ``j`` into one slot labelled ``i+j``.

    Only the slot order changes (``j`` is moved right after ``i``); the
    merge is recorded so :func:`split_party` can undo it.
    """
    layout = rho.layout
    if i == j:
        raise ValueError("cannot merge a party with itself")
    a, b = layout.index(i), layout.index(j)
    order = [k for k in range(len(layout.dims)) if k != b]
    order.insert(order.index(a) + 1, b)
    moved = permute_subsystems(rho, order)
    pos = order.index(a)
    dims = list(moved.layout.dims)
    labels = list(moved.layout.labels)
    label = f"{i}+{j}"
    record = MergeRecord(label, (i, j), (dims[pos], dims[pos + 1]), layout.labels)
    dims[pos : pos + 2] = [dims[pos] * dims[pos + 1]]
    labels[pos : pos + 2] = [label]
    return moved.with_layout(SubsystemLayout(tuple(dims), tuple(labels), layout.merges + (record,)))


def split_party(rho, label: str):
    """Undo a recorded :func:`merge_parties`."""
    layout = rho.layout
    matches = [r for r in layout.merges if r.label == label]
    if not matches:
        raise KeyError(f"no recorded merge for {label!r}")
    record = matches[-1]
    pos = layout.index(label)
    dims = list(layout.dims)
    labels = list(layout.labels)
    dims[pos : pos + 1] = list(record.dims)
    labels[pos : pos + 1] = list(record.parts)
    merges = tuple(r for r in layout.merges if r is not record)
    expanded = rho.with_layout(SubsystemLayout(tuple(dims), tuple(labels), merges))
    if set(labels) != set(record.labels_before):
        # other slots were relabelled since the merge; keep current order
        return expanded
    order = [labels.index(lab) for lab in record.labels_before]
    return permute_subsystems(expanded, order)

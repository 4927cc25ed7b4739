"""CPTP maps in Kraus form, Choi states, and the MDI measurement relay.

Conventions
-----------
* Choi states are reference-first: ``J = (id_R (x) N)(Phi+_{R,In})``.
* Classical registers written by the Bell measurement have dimension 5:
  indices 0..3 are the outcomes Phi+, Phi-, Psi+, Psi- and index 4 is the
  failure flag (written ``⊥`` in comments).
* Erasure outputs a qutrit whose third basis vector is the erasure flag.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .tensor_core import (
    RECON_TOL,
    DensityOperator,
    Operator,
    SubsystemLayout,
    decode_matrix,
    encode_matrix,
    partial_trace,
    permute_subsystems,
)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)

_s = 1 / np.sqrt(2)
# rows: Phi+, Phi-, Psi+, Psi- in the |00>,|01>,|10>,|11> basis
BELL_BASIS = np.array(
    [
        [_s, 0, 0, _s],
        [_s, 0, 0, -_s],
        [0, _s, _s, 0],
        [0, _s, -_s, 0],
    ],
    dtype=complex,
)
BELL_NAMES = ("phi+", "phi-", "psi+", "psi-")
# Pauli U_j with (U_j (x) I)|Phi+> = |Bell_j> up to phase; applying U_j^dagger undoes outcome j
BELL_CORRECTIONS = (I2, Z, X, Z @ X)
REGISTER_DIM = 5
FAIL = 4


@dataclass(frozen=True, eq=False)
class KrausChannel:
    kraus_ops: tuple
    in_layout: SubsystemLayout
    out_layout: SubsystemLayout

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.kraus_ops)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        in_layout = _as_layout(self.in_layout, "A")
        out_layout = _as_layout(self.out_layout, "B")
        shape = (out_layout.total, in_layout.total)
        for k in ops:
            if k.shape != shape:
                raise ValueError(f"Kraus operator shape {k.shape} does not match {shape}")
            k.setflags(write=False)
        s = sum(k.conj().T @ k for k in ops)
        if np.max(np.abs(s - np.eye(shape[1]))) > RECON_TOL:
            raise ValueError("Kraus operators are not trace preserving")
        object.__setattr__(self, "kraus_ops", ops)
        object.__setattr__(self, "in_layout", in_layout)
        object.__setattr__(self, "out_layout", out_layout)

    @property
    def d_in(self) -> int:
        return self.in_layout.total

    @property
    def d_out(self) -> int:
        return self.out_layout.total


def _as_layout(x, prefix) -> SubsystemLayout:
    if isinstance(x, SubsystemLayout):
        return x
    if isinstance(x, int):
        x = [x]
    return SubsystemLayout.of(list(x), prefix=prefix)


@dataclass(frozen=True, eq=False)
class ChoiOperator:
    state: DensityOperator
    in_dim: int
    out_dim: int

    def __post_init__(self):
        ref = partial_trace(self.state, range(self.n_ref))
        if np.max(np.abs(ref.matrix - np.eye(self.in_dim) / self.in_dim)) > RECON_TOL:
            raise ValueError("Choi state marginal on the reference is not maximally mixed")

    @property
    def n_ref(self) -> int:
        # reference slots come first and multiply to in_dim
        total, k = 1, 0
        while total < self.in_dim:
            total *= self.state.layout.dims[k]
            k += 1
        return k

    @property
    def matrix(self) -> np.ndarray:
        return self.state.matrix


def identity_channel(d: int | Sequence[int] = 2) -> KrausChannel:
    layout = _as_layout(d, "A")
    return KrausChannel((np.eye(layout.total),), layout, layout)


def _check_range(name, value, lo, hi):
    if not lo <= value <= hi:
        raise ValueError(f"{name}={value} outside [{lo}, {hi}]")


def erasure_channel(eta: float) -> KrausChannel:
    """Qubit to qutrit: rho -> eta rho (+) (1 - eta) Tr[rho] |e><e|."""
    _check_range("eta", eta, 0.0, 1.0)
    embed = np.zeros((3, 2))
    embed[0, 0] = embed[1, 1] = 1.0
    k1 = np.zeros((3, 2))
    k1[2, 0] = 1.0
    k2 = np.zeros((3, 2))
    k2[2, 1] = 1.0
    ops = (np.sqrt(eta) * embed, np.sqrt(1 - eta) * k1, np.sqrt(1 - eta) * k2)
    return KrausChannel(ops, SubsystemLayout((2,), ("A",)), SubsystemLayout((3,), ("C",)))


def depolarizing(lam: float) -> KrausChannel:
    """rho -> lam rho + (1 - lam) I/2, for -1/3 <= lam <= 1."""
    _check_range("lambda_l", lam, -1 / 3, 1.0)
    c0 = max((1 + 3 * lam) / 4, 0.0)
    c = max((1 - lam) / 4, 0.0)
    ops = (np.sqrt(c0) * I2, np.sqrt(c) * X, np.sqrt(c) * Y, np.sqrt(c) * Z)
    return KrausChannel(ops, SubsystemLayout((2,), ("A",)), SubsystemLayout((2,), ("C",)))


def dephasing(lam: float) -> KrausChannel:
    """rho -> lam rho + (1 - lam) Z rho Z, for 0 <= lam <= 1."""
    _check_range("lambda_s", lam, 0.0, 1.0)
    ops = (np.sqrt(lam) * I2, np.sqrt(1 - lam) * Z)
    return KrausChannel(ops, SubsystemLayout((2,), ("A",)), SubsystemLayout((2,), ("C",)))


def apply(ch: KrausChannel, rho, slots: Sequence[int | str] | None = None):
    """Apply ``ch`` to the listed slots of ``rho`` (identity elsewhere).

    When the channel has as many output slots as input slots the outputs take
    the places of the inputs; otherwise the outputs are appended after the
    untouched slots.
    """
    layout = rho.layout
    n = len(layout.dims)
    slots = list(range(n)) if slots is None else layout.resolve(slots)
    d_in = int(np.prod([layout.dims[k] for k in slots]))
    if d_in != ch.d_in:
        raise ValueError(f"channel input dimension {ch.d_in} does not match slots of dimension {d_in}")
    rest = [k for k in range(n) if k not in slots]
    moved = permute_subsystems(rho, rest + slots)
    d_rest = int(np.prod([layout.dims[k] for k in rest])) if rest else 1
    m = moved.matrix
    out = np.zeros((d_rest * ch.d_out, d_rest * ch.d_out), dtype=complex)
    for k in ch.kraus_ops:
        big = np.kron(np.eye(d_rest), k)
        out += big @ m @ big.conj().T
    rest_layout = layout.restrict(rest)
    out_labels = ch.out_layout.labels
    if len(ch.out_layout.dims) == len(slots):
        out_labels = tuple(layout.labels[k] for k in slots)
    out_layout = SubsystemLayout(ch.out_layout.dims, out_labels)
    new_layout = SubsystemLayout(
        rest_layout.dims + out_layout.dims,
        _unique(rest_layout.labels, out_layout.labels),
        layout.merges,
    )
    result = DensityOperator(0.5 * (out + out.conj().T), new_layout, check=False)
    if len(ch.out_layout.dims) == len(slots) and rest:
        # put outputs back where the inputs were
        order = rest + slots
        inverse = [order.index(k) for k in range(n)]
        result = permute_subsystems(result, inverse)
    return result


def _unique(keep: tuple, new: tuple) -> tuple:
    out = list(keep)
    for lab in new:
        while lab in out:
            lab = lab + "'"
        out.append(lab)
    return tuple(out)


def maximally_entangled(d: int) -> np.ndarray:
    v = np.eye(d).reshape(-1) / np.sqrt(d)
    return np.outer(v, v).astype(complex)


def choi(ch: KrausChannel) -> ChoiOperator:
    """Choi state (id (x) ch)(Phi+) on reference (x) output."""
    d = ch.d_in
    ref_layout = SubsystemLayout(ch.in_layout.dims, tuple("R" + lab for lab in ch.in_layout.labels))
    layout = SubsystemLayout(ref_layout.dims + ch.in_layout.dims, ref_layout.labels + ch.in_layout.labels)
    phi = DensityOperator(maximally_entangled(d), layout, check=False)
    n_ref = len(ref_layout.dims)
    out = apply(ch, phi, list(range(n_ref, len(layout.dims))))
    return ChoiOperator(out, d, ch.d_out)


def apply_via_choi(c: ChoiOperator, rho) -> np.ndarray:
    """N(rho) = d_in Tr_R[(rho^T (x) I) J]; returns a bare matrix."""
    r = np.asarray(rho.matrix if isinstance(rho, Operator) else rho)
    j = c.matrix.reshape(c.in_dim, c.out_dim, c.in_dim, c.out_dim)
    return c.in_dim * np.einsum("ab,aibj->ij", r, j)


def stinespring(ch: KrausChannel) -> np.ndarray:
    """Isometry V = sum_k K_k (x) |k>_env, environment last."""
    r = len(ch.kraus_ops)
    v = np.zeros((ch.d_out * r, ch.d_in), dtype=complex)
    for k, op in enumerate(ch.kraus_ops):
        e = np.zeros((r, 1))
        e[k] = 1.0
        v += np.kron(op, e)
    return v


def compose_serial(chs: Sequence[KrausChannel]) -> KrausChannel:
    """Channel that applies ``chs[0]`` first, then ``chs[1]``, ..."""
    chs = list(chs)
    out = chs[0]
    for nxt in chs[1:]:
        if nxt.d_in != out.d_out:
            raise ValueError(f"cannot feed dimension {out.d_out} into a channel expecting {nxt.d_in}")
        ops = tuple(b @ a for b in nxt.kraus_ops for a in out.kraus_ops)
        out = KrausChannel(ops, out.in_layout, nxt.out_layout)
    return out


def compose_parallel(chs: Sequence[KrausChannel]) -> KrausChannel:
    chs = list(chs)
    out = chs[0]
    for nxt in chs[1:]:
        ops = tuple(np.kron(a, b) for a in out.kraus_ops for b in nxt.kraus_ops)
        out = KrausChannel(ops, out.in_layout.concat(nxt.in_layout), out.out_layout.concat(nxt.out_layout))
    return out


def _bell_measurement_ops(q: float, in_dims: tuple[int, int]) -> list[tuple[int, np.ndarray]]:
    """(outcome, Kraus) pairs of the probabilistic Bell measurement."""
    d1, d2 = in_dims
    dim = d1 * d2
    ops: list[tuple[int, np.ndarray]] = []

    def reg(j):
        e = np.zeros((REGISTER_DIM, 1), dtype=complex)
        e[j] = 1.0
        return e

    qubit_idx = [a * d2 + b for a in range(2) for b in range(2)]
    for j in range(4):
        bell = np.zeros(dim, dtype=complex)
        bell[qubit_idx] = BELL_BASIS[j]
        ops.append((j, np.sqrt(q) * reg(j) @ bell.conj()[None, :]))
    for a in range(d1):
        for b in range(d2):
            if a < 2 and b < 2:
                continue
            basis = np.zeros((1, dim))
            basis[0, a * d2 + b] = 1.0
            ops.append((FAIL, np.sqrt(q) * reg(FAIL) @ basis))
    if q < 1:
        for i in range(dim):
            basis = np.zeros((1, dim))
            basis[0, i] = 1.0
            ops.append((FAIL, np.sqrt(1 - q) * reg(FAIL) @ basis))
    return ops


def bell_measurement_channel(q: float, in_dims: tuple[int, int] = (2, 2)) -> KrausChannel:
    """Bell measurement that succeeds with probability ``q``.

    Inputs are qubits or erasure-flagged qutrits; support touching the flag
    and the failure branch both write the failure outcome.
    """
    _check_range("q", q, 0.0, 1.0)
    in_dims = tuple(int(d) for d in in_dims)
    if len(in_dims) != 2 or any(d not in (2, 3) for d in in_dims):
        raise ValueError(f"Bell measurement supports qubit or qutrit inputs, got {in_dims}")
    ops = tuple(k for _, k in _bell_measurement_ops(q, in_dims))
    return KrausChannel(
        ops, SubsystemLayout(in_dims, ("C1", "C2")), SubsystemLayout((REGISTER_DIM,), ("X",))
    )


def broadcast_isometry() -> np.ndarray:
    """|j> -> |j>|j> on the 5-level register."""
    b = np.zeros((REGISTER_DIM**2, REGISTER_DIM))
    for j in range(REGISTER_DIM):
        b[j * REGISTER_DIM + j, j] = 1.0
    return b


def mdi_channel(ch1: KrausChannel, ch2: KrausChannel, q: float, with_correction: bool = False) -> KrausChannel:
    """Two user links into an untrusted Bell relay whose outcome is broadcast.

    Without correction the map is ``A1 A2 -> Z1 Z2`` (two copies of the outcome
    register).  With correction Alice also routes her retained qubit ``L``
    through the map, ``L A1 A2 -> L Z1 Z2``, and the outcome-conditioned Pauli
    ``U_j^dagger`` is applied to it.
    """
    for ch in (ch1, ch2):
        if ch.d_in != 2:
            raise ValueError("MDI links must take qubit inputs")
    in_dims = (ch1.d_out, ch2.d_out)
    if any(d not in (2, 3) for d in in_dims):
        raise ValueError(f"link outputs must be qubits or qutrits, got {in_dims}")
    b = broadcast_isometry()
    ops = []
    for j, m in _bell_measurement_ops(q, in_dims):
        for k1 in ch1.kraus_ops:
            for k2 in ch2.kraus_ops:
                k = b @ m @ np.kron(k1, k2)
                if not np.any(k):
                    continue
                if with_correction:
                    u = BELL_CORRECTIONS[j].conj().T if j != FAIL else I2
                    k = np.kron(u, k)
                ops.append(k)
    in_layout = SubsystemLayout((2, 2), ("A1", "A2"))
    out_layout = SubsystemLayout((REGISTER_DIM, REGISTER_DIM), ("Z1", "Z2"))
    if with_correction:
        in_layout = SubsystemLayout((2, 2, 2), ("L", "A1", "A2"))
        out_layout = SubsystemLayout((2, REGISTER_DIM, REGISTER_DIM), ("L", "Z1", "Z2"))
    return KrausChannel(tuple(ops), in_layout, out_layout)


def mdi_choi(ch1: KrausChannel, ch2: KrausChannel, q: float, with_correction: bool = True) -> DensityOperator:
    """Choi state of the MDI channel on ``L1 L2 Z1 Z2``.

    ``L1``/``L2`` are the halves of Phi+ kept by Alice and Bob.  With
    correction Alice's half passes through the channel's correction slot.
    """
    phi = maximally_entangled(2)
    layout = SubsystemLayout((2, 2, 2, 2), ("L1", "A1", "A2", "L2"))
    # Phi+_{L1 A1} (x) Phi+_{A2 L2}
    state = DensityOperator(np.kron(phi, phi), layout, check=False)
    ch = mdi_channel(ch1, ch2, q, with_correction)
    slots = ["L1", "A1", "A2"] if with_correction else ["A1", "A2"]
    # outputs replace the inputs in place: L1 Z1 Z2 L2
    out = permute_subsystems(apply(ch, state, slots), [0, 3, 1, 2])
    return out.with_layout(SubsystemLayout(out.layout.dims, ("L1", "L2", "Z1", "Z2")))


# channel JSON


def channel_to_json(ch: KrausChannel) -> str:
    return json.dumps(
        {
            "kind": "kraus",
            "in_dims": list(ch.in_layout.dims),
            "out_dims": list(ch.out_layout.dims),
            "ops": [encode_matrix(k) for k in ch.kraus_ops],
        }
    )


def channel_from_json(text: str) -> KrausChannel:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict) or obj.get("kind") != "kraus":
        raise ValueError("channel JSON must have kind 'kraus'")
    try:
        in_dims, out_dims, raw = obj["in_dims"], obj["out_dims"], obj["ops"]
    except KeyError as exc:
        raise ValueError(f"channel JSON missing {exc}") from None
    ops = []
    for entry in raw:
        arr = np.asarray(entry, dtype=float)
        d_out, d_in = int(np.prod(out_dims)), int(np.prod(in_dims))
        if arr.shape[-1] != 2 or arr.size != 2 * d_out * d_in:
            raise ValueError("Kraus operator data does not match in_dims/out_dims")
        arr = arr.reshape(d_out, d_in, 2)
        ops.append(arr[..., 0] + 1j * arr[..., 1])
    return KrausChannel(tuple(ops), SubsystemLayout.of(in_dims), SubsystemLayout.of(out_dims, prefix="B"))


__all__ = [
    "BELL_BASIS",
    "BELL_CORRECTIONS",
    "ChoiOperator",
    "KrausChannel",
    "apply",
    "apply_via_choi",
    "bell_measurement_channel",
    "choi",
    "compose_parallel",
    "compose_serial",
    "dephasing",
    "depolarizing",
    "erasure_channel",
    "identity_channel",
    "mdi_channel",
    "mdi_choi",
    "stinespring",
    "decode_matrix",
]

"""Dense multipartite linear algebra.

Operators carry a :class:`SubsystemLayout` (local dimensions plus a party
label per slot).  Everything here is a pure function of immutable values.
All logarithms elsewhere in the package are base 2.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

HERM_TOL = 1e-10
SUPPORT_TOL = 1e-12
RECON_TOL = 1e-9


@dataclass(frozen=True)
class MergeRecord:
    """Bookkeeping for a merged slot so the merge can be undone."""

    label: str
    parts: tuple[str, str]
    dims: tuple[int, int]
    labels_before: tuple[str, ...]


@dataclass(frozen=True)
class SubsystemLayout:
    dims: tuple[int, ...]
    labels: tuple[str, ...]
    merges: tuple[MergeRecord, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
        if len(self.dims) != len(self.labels):
            raise ValueError("dims and labels must have the same length")
        if any(d < 1 for d in self.dims):
            raise ValueError(f"dimensions must be positive, got {self.dims}")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"labels must be unique, got {self.labels}")

    @classmethod
    def of(cls, dims: Sequence[int], labels: Sequence[str] | None = None, prefix: str = "A"):
        if labels is None:
            labels = [f"{prefix}{k + 1}" for k in range(len(dims))]
        return cls(tuple(dims), tuple(labels))

    @property
    def total(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.dims else 1

    def __len__(self):
        return len(self.dims)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown subsystem label {label!r}") from None

    def resolve(self, slots: Iterable[int | str]) -> list[int]:
        """Turn a mix of slot indices and labels into validated indices."""
        out = []
        for s in slots:
            k = self.index(s) if isinstance(s, str) else int(s)
            if not 0 <= k < len(self.dims):
                raise IndexError(f"subsystem index {k} out of range for {len(self.dims)} slots")
            out.append(k)
        if len(set(out)) != len(out):
            raise ValueError(f"repeated subsystem in {out}")
        return out

    def restrict(self, keep: Sequence[int]) -> "SubsystemLayout":
        return SubsystemLayout(
            tuple(self.dims[k] for k in keep), tuple(self.labels[k] for k in keep), self.merges
        )

    def permuted(self, perm: Sequence[int]) -> "SubsystemLayout":
        return SubsystemLayout(
            tuple(self.dims[k] for k in perm), tuple(self.labels[k] for k in perm), self.merges
        )

    def concat(self, other: "SubsystemLayout") -> "SubsystemLayout":
        return SubsystemLayout(
            self.dims + other.dims,
            _dedupe(self.labels + other.labels),
            self.merges + other.merges,
        )


def _dedupe(labels: Sequence[str]) -> tuple[str, ...]:
    seen: dict[str, int] = {}
    out = []
    for lab in labels:
        if lab in seen:
            seen[lab] += 1
            new = f"{lab}#{seen[lab]}"
            while new in labels or new in out:
                seen[lab] += 1
                new = f"{lab}#{seen[lab]}"
            out.append(new)
        else:
            seen[lab] = 1
            out.append(lab)
    return tuple(out)


def _layout_for(matrix_dim: int, layout: SubsystemLayout | Sequence[int] | None) -> SubsystemLayout:
    if layout is None:
        layout = SubsystemLayout.of([matrix_dim])
    elif not isinstance(layout, SubsystemLayout):
        layout = SubsystemLayout.of(list(layout))
    if layout.total != matrix_dim:
        raise ValueError(f"layout dims {layout.dims} do not match matrix dimension {matrix_dim}")
    return layout


@dataclass(frozen=True, eq=False)
class Operator:
    """Square complex matrix annotated with a subsystem layout."""

    matrix: np.ndarray
    layout: SubsystemLayout = None
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator must be a square matrix, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "layout", _layout_for(m.shape[0], self.layout))
        if self.check:
            self._validate()

    def _validate(self):
        pass

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def dims(self) -> tuple[int, ...]:
        return self.layout.dims

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def with_layout(self, layout: SubsystemLayout):
        return replace(self, layout=layout, check=False)


class HermitianOperator(Operator):
    def _validate(self):
        m = self.matrix
        if np.max(np.abs(m - m.conj().T), initial=0.0) > HERM_TOL * max(1.0, np.max(np.abs(m), initial=0.0)):
            raise ValueError("operator is not Hermitian within tolerance")


class DensityOperator(HermitianOperator):
    def _validate(self):
        super()._validate()
        if abs(np.trace(self.matrix).real - 1.0) > HERM_TOL:
            raise ValueError(f"density operator must have unit trace, got {np.trace(self.matrix).real!r}")
        lo = np.linalg.eigvalsh(_hermitize(self.matrix))[0]
        if lo < -HERM_TOL:
            raise ValueError(f"density operator is not positive semidefinite (min eigenvalue {lo:.3e})")


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    layout: SubsystemLayout = None

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if abs(np.linalg.norm(v) - 1.0) > HERM_TOL:
            raise ValueError(f"state vector must have unit norm, got {np.linalg.norm(v)!r}")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)
        object.__setattr__(self, "layout", _layout_for(v.size, self.layout))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> DensityOperator:
        v = self.amplitudes
        return DensityOperator(np.outer(v, v.conj()), self.layout)


def _hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def as_matrix(x) -> np.ndarray:
    """Accept an Operator, StateVector or array and return a dense matrix."""
    if isinstance(x, Operator):
        return x.matrix
    if isinstance(x, StateVector):
        return x.density().matrix
    return np.asarray(x, dtype=complex)


def _result_type(a, b):
    for cls in (DensityOperator, HermitianOperator):
        if isinstance(a, cls) and isinstance(b, cls):
            return cls
    return Operator


def kron(a, b):
    """Tensor product; layouts concatenate (colliding labels get ``#k`` suffixes)."""
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(np.kron(a.amplitudes, b.amplitudes), a.layout.concat(b.layout))
    if isinstance(a, StateVector):
        a = a.density()
    if isinstance(b, StateVector):
        b = b.density()
    cls = _result_type(a, b)
    return cls(np.kron(a.matrix, b.matrix), a.layout.concat(b.layout), check=False)


def kron_all(ops: Sequence):
    out = ops[0]
    for op in ops[1:]:
        out = kron(out, op)
    return out


def tensor_power(op, n: int):
    """``op`` to the n-th tensor power, copy-major ordering.

    Slot labels become ``label#c`` for copy ``c`` (1-based) when n > 1.
    """
    if n < 1:
        raise ValueError("tensor power needs n >= 1")
    if n == 1:
        return op
    labels = tuple(f"{lab}#{c + 1}" for c in range(n) for lab in op.layout.labels)
    layout = SubsystemLayout(op.layout.dims * n, labels)
    if isinstance(op, StateVector):
        v = op.amplitudes
        for _ in range(n - 1):
            v = np.kron(v, op.amplitudes)
        return StateVector(v, layout)
    m = op.matrix
    for _ in range(n - 1):
        m = np.kron(m, op.matrix)
    return type(op)(m, layout, check=False)


def partial_trace(rho, keep: Iterable[int | str]):
    """Trace out every slot not listed in ``keep`` (kept slots stay in original order)."""
    if isinstance(rho, StateVector):
        rho = rho.density()
    layout = rho.layout
    keep = sorted(layout.resolve(keep))
    if not keep:
        raise ValueError("keep must name at least one subsystem")
    n = len(layout.dims)
    drop = [k for k in range(n) if k not in keep]
    dims = layout.dims
    t = rho.matrix.reshape(dims + dims)
    dk = int(np.prod([dims[k] for k in keep]))
    dd = int(np.prod([dims[k] for k in drop])) if drop else 1
    t = t.transpose(keep + drop + [n + k for k in keep] + [n + k for k in drop])
    t = t.reshape(dk, dd, dk, dd)
    m = np.einsum("ajbj->ab", t)
    return type(rho)(m, layout.restrict(keep), check=False)


def _perm_indices(perm: Sequence[int], n: int) -> list[int]:
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(n)):
        raise ValueError(f"malformed permutation {perm} for {n} subsystems")
    return perm


def permute_subsystems(x, perm: Sequence[int]):
    """Reorder slots: new slot ``k`` is old slot ``perm[k]``.

    Applying ``p1`` then ``p2`` equals applying ``[p1[i] for i in p2]``.
    """
    layout = x.layout
    n = len(layout.dims)
    perm = _perm_indices(perm, n)
    dims = layout.dims
    new_layout = layout.permuted(perm)
    if isinstance(x, StateVector):
        v = x.amplitudes.reshape(dims).transpose(perm).reshape(-1)
        return StateVector(v, new_layout)
    t = x.matrix.reshape(dims + dims).transpose(perm + [n + p for p in perm])
    return type(x)(t.reshape(x.dim, x.dim), new_layout, check=False)


def permutation_unitary(dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Unitary P with P X P^dagger == permute_subsystems(X, perm)."""
    dims = tuple(dims)
    perm = _perm_indices(perm, len(dims))
    total = int(np.prod(dims))
    idx = np.arange(total).reshape(dims).transpose(perm).reshape(-1)
    p = np.zeros((total, total))
    p[np.arange(total), idx] = 1.0
    return p


def eig_hermitian(h) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and unitary eigenvectors of a Hermitian matrix."""
    m = as_matrix(h)
    scale = max(1.0, np.max(np.abs(m), initial=0.0))
    if np.max(np.abs(m - m.conj().T), initial=0.0) > HERM_TOL * scale:
        raise ValueError("eig_hermitian needs a Hermitian matrix")
    return np.linalg.eigh(_hermitize(m))


def matrix_fn(h, f: Callable[[np.ndarray], np.ndarray], support_only: bool = False):
    """Apply ``f`` to the eigenvalues of a Hermitian operator.

    With ``support_only`` eigenvalues below ``SUPPORT_TOL`` are mapped to 0
    instead of being passed to ``f``.
    """
    w, v = eig_hermitian(h)
    fw = np.zeros_like(w)
    mask = w > SUPPORT_TOL if support_only else np.ones_like(w, dtype=bool)
    with np.errstate(all="ignore"):
        vals = np.asarray(f(w[mask]), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("matrix function is undefined on the spectrum")
    fw[mask] = vals
    m = (v * fw) @ v.conj().T
    layout = h.layout if isinstance(h, Operator) else None
    return HermitianOperator(_hermitize(m), layout, check=False)


def purify(rho) -> StateVector:
    """Purification with an ancilla of dimension rank(rho), ancilla slot last."""
    w, v = eig_hermitian(rho)
    keep = w > SUPPORT_TOL
    w, v = w[keep][::-1], v[:, keep][:, ::-1]
    w = w / w.sum()
    r = w.size
    psi = np.zeros((v.shape[0], r), dtype=complex)
    psi[:, np.arange(r)] = v * np.sqrt(w)
    layout = rho.layout if isinstance(rho, Operator) else SubsystemLayout.of([v.shape[0]])
    anc = "anc"
    while anc in layout.labels:
        anc += "'"
    return StateVector(psi.reshape(-1), layout.concat(SubsystemLayout((r,), (anc,))))


# shared operator JSON format


def operator_to_json(op: Operator) -> str:
    m = op.matrix
    data = [[float(z.real), float(z.imag)] for z in m.reshape(-1)]
    return json.dumps({"dims": list(op.layout.dims), "labels": list(op.layout.labels), "data": data})


def operator_from_json(text: str, cls=DensityOperator) -> Operator:
    """Read the shared operator format; raises ValueError on malformed content."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict) or not {"dims", "data"} <= obj.keys():
        raise ValueError("operator JSON needs 'dims' and 'data'")
    m = decode_matrix(obj["data"])
    dims = obj["dims"]
    if not isinstance(dims, list) or not all(isinstance(d, int) and d > 0 for d in dims):
        raise ValueError("'dims' must be a list of positive integers")
    labels = obj.get("labels")
    layout = SubsystemLayout.of(dims, labels)
    if layout.total != m.shape[0]:
        raise ValueError(f"dims {dims} do not match matrix dimension {m.shape[0]}")
    return cls(m, layout)


def decode_matrix(data) -> np.ndarray:
    """Row-major list of [re, im] pairs (flat or nested by rows) to a square matrix."""
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError):
        raise ValueError("matrix data must be numeric [re, im] pairs") from None
    if arr.ndim == 2 and arr.shape[1] == 2:
        n = int(round(np.sqrt(arr.shape[0])))
        if n * n != arr.shape[0]:
            raise ValueError(f"{arr.shape[0]} entries do not form a square matrix")
        arr = arr.reshape(n, n, 2)
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError("matrix data is not a square array of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def encode_matrix(m: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(m).reshape(-1)]

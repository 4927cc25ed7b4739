"""Achievable conference-key rates: Devetak-Winter rates and network aggregators."""

from __future__ import annotations

import heapq
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .divergences import cond_mutual_info
from .tensor_core import partial_trace

MAX_CHAIN_PARTIES = 10
CLASSICAL_TOL = 1e-9


class DisconnectedGraph(ValueError):
    pass


# Devetak-Winter


def _offdiag_leak(rho, slot: int) -> float:
    """Largest entry of rho coupling different basis states of ``slot``."""
    dims = rho.layout.dims
    n = len(dims)
    t = rho.matrix.reshape(dims + dims)
    t = np.moveaxis(t, (slot, n + slot), (0, 1))
    d = dims[slot]
    leak = 0.0
    for a in range(d):
        for b in range(d):
            if a != b:
                leak = max(leak, float(np.max(np.abs(t[a, b]), initial=0.0)))
    return leak


def dw_rate(rho, y: Sequence, target: Sequence, e: Sequence, z: Sequence = ()) -> float:
    """I(Y:B|Z) - I(Y:E|Z) in bits; negative values are returned as-is."""
    layout = rho.layout
    y_idx, z_idx = layout.resolve(y), layout.resolve(z)
    for k in y_idx + z_idx:
        leak = _offdiag_leak(rho, k)
        if leak > CLASSICAL_TOL:
            raise ValueError(f"register {layout.labels[k]!r} is not classical (off-diagonal {leak:.2e})")
    return cond_mutual_info(rho, y, target, z) - cond_mutual_info(rho, y, e, z)


def measure_computational(rho, slots: Sequence):
    """Replace the listed slots by their computational-basis measurement records."""
    from .channels import apply, dephasing

    out = rho
    ch = dephasing(0.5)
    for k in rho.layout.resolve(slots):
        if rho.layout.dims[k] != 2:
            raise ValueError("only qubit slots can be measured with the built-in dephaser")
        out = apply(ch, out, [k])
    return out


# rate matrices


@dataclass(frozen=True, eq=False)
class RateMatrix:
    labels: tuple[str, ...]
    rates: np.ndarray

    def __post_init__(self):
        r = np.array(self.rates, dtype=float)
        m = len(self.labels)
        if r.shape != (m, m):
            raise ValueError(f"rate matrix must be {m}x{m}, got {r.shape}")
        if np.any(np.isnan(r)) or np.any(r == np.inf):
            raise ValueError("rates must be finite or -inf")
        r.setflags(write=False)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "rates", r)

    @classmethod
    def from_json(cls, text: str) -> "RateMatrix":
        try:
            obj = json.loads(text)
            labels = obj["labels"]
            rows = [[-math.inf if x is None else float(x) for x in row] for row in obj["rates"]]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ValueError(f"malformed rate-matrix JSON: {exc}") from None
        return cls(tuple(labels), np.array(rows, dtype=float).reshape(len(labels), -1) if rows else np.zeros((0, 0)))

    def to_json(self) -> str:
        rows = [[None if x == -math.inf else float(x) for x in row] for row in self.rates]
        return json.dumps({"labels": list(self.labels), "rates": rows})


def star_rate(r: RateMatrix | np.ndarray) -> tuple[float, int]:
    """Best distributing party: max_i min_{j != i} R[i, j] (lowest index wins ties)."""
    a = np.asarray(r.rates if isinstance(r, RateMatrix) else r, dtype=float)
    m = a.shape[0]
    if m < 2:
        raise ValueError("need at least two parties")
    best, hub = -math.inf, 0
    for i in range(m):
        v = min(a[i, j] for j in range(m) if j != i)
        if v > best:
            best, hub = v, i
    return float(best), hub


def chain_rate(r: RateMatrix | np.ndarray) -> tuple[float, tuple[int, ...]]:
    """Best relay chain: max over orderings of the weakest consecutive link.

    Solved exactly by dynamic programming over subsets; the returned ordering
    is the lexicographically first optimal one.
    """
    a = np.asarray(r.rates if isinstance(r, RateMatrix) else r, dtype=float)
    m = a.shape[0]
    if m < 2:
        raise ValueError("need at least two parties")
    if m > MAX_CHAIN_PARTIES:
        raise ValueError(f"chain search is exponential; at most {MAX_CHAIN_PARTIES} parties supported")
    full = (1 << m) - 1
    # best[mask][last]: best bottleneck of a path covering mask ending at last
    best = np.full((1 << m, m), -math.inf)
    for i in range(m):
        best[1 << i, i] = math.inf
    for mask in range(1, full + 1):
        for last in range(m):
            cur = best[mask, last]
            if cur == -math.inf or not mask >> last & 1:
                continue
            for nxt in range(m):
                if mask >> nxt & 1:
                    continue
                v = min(cur, a[last, nxt])
                nm = mask | 1 << nxt
                if v > best[nm, nxt]:
                    best[nm, nxt] = v
    value = float(best[full].max())
    return value, _first_path(a, value)


def _first_path(a: np.ndarray, value: float) -> tuple[int, ...]:
    m = a.shape[0]
    ok = a >= value
    memo: dict[tuple[int, int], bool] = {}

    def completes(mask, last):
        if mask == (1 << m) - 1:
            return True
        key = (mask, last)
        if key not in memo:
            memo[key] = any(
                not mask >> n & 1 and ok[last, n] and completes(mask | 1 << n, n) for n in range(m)
            )
        return memo[key]

    for start in range(m):
        if completes(1 << start, start):
            path, mask, last = [start], 1 << start, start
            while mask != (1 << m) - 1:
                for n in range(m):
                    if not mask >> n & 1 and ok[last, n] and completes(mask | 1 << n, n):
                        path.append(n)
                        mask |= 1 << n
                        last = n
                        break
            return tuple(path)
    return tuple(range(m))


# graphs


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str, float], ...] = field(default=())

    def __post_init__(self):
        nodes = tuple(str(n) for n in self.nodes)
        if len(set(nodes)) != len(nodes):
            raise ValueError("node labels must be unique")
        known = set(nodes)
        edges = []
        for u, v, w in self.edges:
            u, v, w = str(u), str(v), float(w)
            if u not in known or v not in known:
                raise ValueError(f"edge ({u}, {v}) references an unknown node")
            if u == v:
                raise ValueError(f"self-loop at {u}")
            if not (math.isfinite(w) and w >= 0):
                raise ValueError(f"edge weight must be finite and nonnegative, got {w}")
            edges.append((u, v, w))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", tuple(edges))

    @classmethod
    def from_json(cls, text: str) -> "WeightedGraph":
        try:
            obj = json.loads(text)
            nodes = obj["nodes"]
            edges = [(e["u"], e["v"], e["weight"]) for e in obj["edges"]]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ValueError(f"malformed graph JSON: {exc}") from None
        return cls(tuple(nodes), tuple(edges))

    def to_json(self) -> str:
        return json.dumps(
            {"nodes": list(self.nodes), "edges": [{"u": u, "v": v, "weight": w} for u, v, w in self.edges]}
        )

    def collapsed(self) -> dict[frozenset, float]:
        """Parallel edges reduced to their heaviest copy."""
        out: dict[frozenset, float] = {}
        for u, v, w in self.edges:
            key = frozenset((u, v))
            out[key] = max(out.get(key, -math.inf), w)
        return out

    def rate_matrix(self) -> RateMatrix:
        """Symmetric rates from edge weights; missing links are -inf."""
        idx = {n: i for i, n in enumerate(self.nodes)}
        r = np.full((len(self.nodes),) * 2, -math.inf)
        for key, w in self.collapsed().items():
            u, v = tuple(key)
            r[idx[u], idx[v]] = r[idx[v], idx[u]] = w
        np.fill_diagonal(r, 0.0)
        return RateMatrix(self.nodes, r)


def max_bottleneck_spanning_tree(g: WeightedGraph) -> tuple[float, list[tuple[str, str, float]]]:
    """Spanning tree maximising its weakest edge.

    Reweights each edge to ``W - w`` (``W`` the largest weight), grows a
    minimum spanning tree with a heap-based Prim, and reports ``W`` minus the
    largest reweighted edge of that tree.
    """
    if len(g.nodes) < 2:
        raise ValueError("need at least two nodes")
    collapsed = g.collapsed()
    top = max(collapsed.values(), default=0.0)
    adj: dict[str, list[tuple[float, str]]] = {n: [] for n in g.nodes}
    for key, w in collapsed.items():
        u, v = sorted(key, key=g.nodes.index)
        adj[u].append((top - w, v))
        adj[v].append((top - w, u))
    start = g.nodes[0]
    seen = {start}
    heap = [(c, start, v) for c, v in adj[start]]
    heapq.heapify(heap)
    tree = []
    worst = 0.0
    while heap and len(seen) < len(g.nodes):
        c, u, v = heapq.heappop(heap)
        if v in seen:
            continue
        seen.add(v)
        tree.append((u, v, top - c))
        worst = max(worst, c)
        for c2, x in adj[v]:
            if x not in seen:
                heapq.heappush(heap, (c2, v, x))
    if len(seen) < len(g.nodes):
        raise DisconnectedGraph("graph is disconnected; no spanning tree exists")
    return top - worst, tree


def tree_rate(g: WeightedGraph) -> float:
    return max_bottleneck_spanning_tree(g)[0]


def brute_force_bottleneck(g: WeightedGraph) -> float:
    """Exhaustive oracle: best minimum edge over all spanning trees."""
    nodes = list(g.nodes)
    edges = [(tuple(k), w) for k, w in g.collapsed().items()]
    best = -math.inf
    for subset in itertools.combinations(edges, len(nodes) - 1):
        parent = {n: n for n in nodes}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        ok = True
        for (u, v), _ in subset:
            ru, rv = find(u), find(v)
            if ru == rv:
                ok = False
                break
            parent[ru] = rv
        if ok:
            best = max(best, min(w for _, w in subset))
    if best == -math.inf:
        raise DisconnectedGraph("graph is disconnected; no spanning tree exists")
    return best


def example_graph() -> WeightedGraph:
    """Six-node example: strong links form a spanning tree that is not a path,
    and node v1 reaches every other node."""
    strong = [("v1", "v2"), ("v2", "v3"), ("v2", "v6"), ("v3", "v4"), ("v3", "v5")]
    weak = [("v1", "v3"), ("v1", "v4"), ("v1", "v5"), ("v1", "v6")]
    nodes = tuple(f"v{i}" for i in range(1, 7))
    return WeightedGraph(nodes, tuple((u, v, 2.0) for u, v in strong) + tuple((u, v, 1.0) for u, v in weak))

"""Distinguishability measures and entropies, all in bits.

Infinite divergences are returned as ``math.inf`` (never a large float).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .tensor_core import (
    SUPPORT_TOL,
    HermitianOperator,
    as_matrix,
    partial_trace,
)

INF = math.inf
LEAK_TOL = 1e-9
GAP_TOL_BITS = 1e-6


class NumericalFailure(RuntimeError):
    """A solver could not certify its answer within tolerance."""


def _pair(rho, sigma) -> tuple[np.ndarray, np.ndarray]:
    r, s = as_matrix(rho), as_matrix(sigma)
    if r.shape != s.shape:
        raise ValueError(f"dimension mismatch: {r.shape} vs {s.shape}")
    return r, s


def _eigh(m: np.ndarray):
    return np.linalg.eigh(0.5 * (m + m.conj().T))


def _power(m: np.ndarray, p: float) -> np.ndarray:
    """m^p on the support of a PSD matrix (pseudo-inverse for p < 0)."""
    w, v = _eigh(m)
    keep = w > SUPPORT_TOL
    wp = np.zeros_like(w)
    wp[keep] = w[keep] ** p
    return (v * wp) @ v.conj().T


def _support_leak(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Weight of rho outside supp(sigma)."""
    w, v = _eigh(sigma)
    ker = v[:, w <= SUPPORT_TOL]
    if ker.shape[1] == 0:
        return 0.0
    return float(np.real(np.trace(ker.conj().T @ rho @ ker)))


def fidelity(rho, sigma) -> float:
    """Squared fidelity ``(Tr sqrt(sqrt(sigma) rho sqrt(sigma)))^2``.

    Evaluated as the squared nuclear norm of ``sqrt(rho) sqrt(sigma)``, which
    avoids taking square roots of rounding-level eigenvalues.
    """
    r, s = _pair(rho, sigma)
    sv = np.linalg.svd(_power(r, 0.5) @ _power(s, 0.5), compute_uv=False)
    return min(max(float(np.sum(sv)) ** 2, 0.0), 1.0)


def trace_distance(rho, sigma) -> float:
    r, s = _pair(rho, sigma)
    w = np.linalg.eigvalsh(0.5 * ((r - s) + (r - s).conj().T))
    return min(0.5 * float(np.sum(np.abs(w))), 1.0)


def _xlogx_sum(w: np.ndarray) -> float:
    w = w[w > SUPPORT_TOL]
    return float(np.sum(w * np.log2(w)))


def von_neumann_entropy(rho) -> float:
    w = np.linalg.eigvalsh(0.5 * (as_matrix(rho) + as_matrix(rho).conj().T))
    return max(-_xlogx_sum(w), 0.0)


def relative_entropy(rho, sigma) -> float:
    """Umegaki relative entropy ``Tr[rho (log rho - log sigma)]``."""
    r, s = _pair(rho, sigma)
    if _support_leak(r, s) > LEAK_TOL:
        return INF
    ws, vs = _eigh(s)
    keep = ws > SUPPORT_TOL
    log_s = (vs[:, keep] * np.log2(ws[keep])) @ vs[:, keep].conj().T
    cross = float(np.real(np.trace(r @ log_s)))
    wr = np.linalg.eigvalsh(0.5 * (r + r.conj().T))
    return max(_xlogx_sum(wr) - cross, 0.0)


def max_relative_entropy(rho, sigma) -> float:
    r, s = _pair(rho, sigma)
    if _support_leak(r, s) > LEAK_TOL:
        return INF
    inv = _power(s, -0.5)
    top = np.linalg.eigvalsh(0.5 * ((inv @ r @ inv) + (inv @ r @ inv).conj().T))[-1]
    return float(np.log2(top))


def sandwiched_renyi(rho, sigma, alpha: float) -> float:
    """Sandwiched Renyi divergence of order ``alpha`` (not 1)."""
    if not (alpha > 0 and alpha != 1 and math.isfinite(alpha)):
        raise ValueError(f"alpha must lie in (0,1) or (1,inf), got {alpha}")
    r, s = _pair(rho, sigma)
    if alpha > 1 and _support_leak(r, s) > LEAK_TOL:
        return INF
    p = (1 - alpha) / (2 * alpha)
    # eigenvalues of s^p r s^p are the squared singular values of s^p sqrt(r)
    sv = np.linalg.svd(_power(s, p) @ _power(r, 0.5), compute_uv=False)
    q = float(np.sum(sv ** (2 * alpha)))
    if q <= 0:
        return INF
    return math.log2(q) / (alpha - 1)


def binary_entropy(p: float) -> float:
    if not 0 <= p <= 1:
        raise ValueError(f"probability {p} outside [0, 1]")
    if p in (0, 1):
        return 0.0
    return float(-p * math.log2(p) - (1 - p) * math.log2(1 - p))


def cond_mutual_info(rho, y: Sequence, b: Sequence, z: Sequence = ()) -> float:
    """I(Y:B|Z) = S(YZ) + S(BZ) - S(YBZ) - S(Z); groups are slot indices or labels."""
    layout = rho.layout
    y, b, z = (layout.resolve(g) for g in (y, b, z))
    if set(y) & set(b) or set(y) & set(z) or set(b) & set(z):
        raise ValueError("groups must be disjoint")

    def s(slots):
        return von_neumann_entropy(partial_trace(rho, slots)) if slots else 0.0

    return s(y + z) + s(b + z) - s(y + b + z) - s(z)


def mutual_info(rho, y: Sequence, b: Sequence) -> float:
    return cond_mutual_info(rho, y, b, ())


# hypothesis testing


@dataclass(frozen=True)
class HypTestResult:
    value_bits: float
    test_operator: HermitianOperator
    primal: float
    dual: float
    mu: float
    epsilon: float

    @property
    def primal_bits(self) -> float:
        return _neg_log2(self.primal)

    @property
    def dual_bits(self) -> float:
        return _neg_log2(self.dual)

    @property
    def gap_bits(self) -> float:
        a, b = self.primal_bits, self.dual_bits
        if a == b:
            return 0.0
        return abs(a - b)


def _neg_log2(x: float) -> float:
    return INF if x <= 0 else -math.log2(x)


def _split(r: np.ndarray, s: np.ndarray, mu: float):
    """Projectors onto the strictly positive part of ``mu r - s`` and its complement."""
    w, v = _eigh(mu * r - s)
    pos = v[:, w > 0]
    neg = v[:, w <= 0]
    return pos, neg


def _weights(r, s, pos, neg, eps, mu):
    """rho-weight of the positive part and the Lagrange dual value at ``mu``."""
    r_pos = float(np.real(np.einsum("ij,ik,kj->", pos.conj(), r, pos))) if pos.size else 0.0
    r_neg = float(np.real(np.einsum("ij,ik,kj->", neg.conj(), r, neg))) if neg.size else 0.0
    s_pos = float(np.real(np.einsum("ij,ik,kj->", pos.conj(), s, pos))) if pos.size else 0.0
    # mu (1 - eps) - Tr[(mu r - s)_+], rearranged to avoid cancellation at large mu
    dual = mu * (r_neg - eps) + s_pos
    return r_pos, dual


def hypothesis_testing(rho, sigma, eps: float, max_iter: int = 200) -> HypTestResult:
    """epsilon-hypothesis-testing divergence ``-log2 min Tr[L sigma]`` s.t. ``Tr[L rho] >= 1 - eps``.

    The optimum is a Neyman-Pearson test: a threshold ``mu`` is found by
    bisection and the two projectors bracketing it are mixed so the type-I
    constraint is met with equality.  The Lagrange dual at ``mu`` certifies
    optimality; a gap above ``GAP_TOL_BITS`` raises :class:`NumericalFailure`.
    """
    if not 0 <= eps < 1:
        raise ValueError(f"epsilon must lie in [0, 1), got {eps}")
    r, s = _pair(rho, sigma)
    target = 1.0 - eps

    wr, vr = _eigh(r)
    supp = vr[:, wr > SUPPORT_TOL]
    overlap = float(np.real(np.trace(supp.conj().T @ s @ supp)))
    if overlap <= 1e-14:
        # disjoint supports: the support projector has zero type-II error
        lam = supp @ supp.conj().T
        return HypTestResult(INF, HermitianOperator(lam, _layout(rho), check=False), 0.0, 0.0, INF, eps)

    ws, vs = _eigh(s)
    ker = vs[:, ws <= SUPPORT_TOL]
    if ker.shape[1] and float(np.real(np.trace(ker.conj().T @ r @ ker))) >= target - 1e-12:
        # enough of rho lies outside supp(sigma) to pass with zero type-II error
        lam = ker @ ker.conj().T
        return HypTestResult(INF, HermitianOperator(lam, _layout(rho), check=False), 0.0, 0.0, INF, eps)

    if target == 1.0:
        # eps below double resolution is indistinguishable from 0
        return _hyp_exact(r, s, supp, overlap, rho, eps)

    def r_weight(mu):
        pos, neg = _split(r, s, mu)
        return _weights(r, s, pos, neg, eps, mu)[0]

    lo, hi = 0.0, 1.0
    while r_weight(hi) < target:
        lo, hi = hi, 2 * hi
        if hi > 1e15:
            raise NumericalFailure("could not bracket the Neyman-Pearson threshold")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if r_weight(mid) >= target:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * hi:
            break

    pos_lo, neg_lo = _split(r, s, lo)
    pos_hi, neg_hi = _split(r, s, hi)
    p_lo = pos_lo @ pos_lo.conj().T
    p_hi = pos_hi @ pos_hi.conj().T
    w_lo, dual_lo = _weights(r, s, pos_lo, neg_lo, eps, lo)
    w_hi, dual_hi = _weights(r, s, pos_hi, neg_hi, eps, hi)
    x = 1.0 if w_hi - w_lo <= 0 else min(max((target - w_lo) / (w_hi - w_lo), 0.0), 1.0)
    lam = (1 - x) * p_lo + x * p_hi
    lam = 0.5 * (lam + lam.conj().T)
    primal = float(np.real(np.trace(lam @ s)))
    dual, mu = (dual_hi, hi) if dual_hi >= dual_lo else (dual_lo, lo)
    res = HypTestResult(
        _neg_log2(primal), HermitianOperator(lam, _layout(rho), check=False), primal, dual, mu, eps
    )
    _certify(res)
    return res


def _hyp_exact(r, s, supp, overlap, rho, eps: float = 0.0) -> HypTestResult:
    """eps = 0: the support projector of rho is optimal; the dual is approached as mu grows."""
    lam = supp @ supp.conj().T
    best, best_mu = -INF, 0.0
    mu = max(1.0, 1.0 / overlap)
    while mu < 1e14:
        pos, neg = _split(r, s, mu)
        dual = _weights(r, s, pos, neg, 0.0, mu)[1]
        if dual >= overlap * (1 - 1e-12):
            # converged up to rounding
            best, best_mu = min(dual, overlap), mu
            break
        if dual > best:
            best, best_mu = dual, mu
        if best > 0 and math.log2(overlap) - math.log2(best) <= 1e-10:
            break
        mu *= 2
    res = HypTestResult(
        _neg_log2(overlap), HermitianOperator(lam, _layout(rho), check=False), overlap, best, best_mu, eps
    )
    _certify(res)
    return res


def _layout(x):
    return getattr(x, "layout", None)


def _certify(res: HypTestResult):
    # rounding at large mu can push the dual a hair above the primal; the
    # two-sided gap covers both directions
    if not res.gap_bits <= GAP_TOL_BITS:
        raise NumericalFailure(f"duality gap {res.gap_bits:.3e} bits exceeds {GAP_TOL_BITS}")


def hyp_bound_from_fidelity(f: float, eps: float, loose: bool = False) -> float:
    """Fidelity upper bound on D_h^eps; ``f`` is the squared fidelity.

    Returns the tighter expression unless ``loose`` is set.
    """
    rf = math.sqrt(f)
    re = math.sqrt(eps)
    if not (0 <= eps and re < rf):
        raise ValueError(f"need 0 <= sqrt(eps) < sqrt(F), i.e. eps < F; got eps={eps}, F={f}")
    a = rf - re
    if loose:
        return -2 * math.log2(a)
    return -2 * math.log2(rf - re * math.sqrt(max(1 - a * a, 0.0)))


def hyp_bound_from_trace_distance(t: float, eps: float) -> float:
    if not (0 <= eps < 1 - t):
        raise ValueError(f"need 0 <= eps < 1 - T; got eps={eps}, T={t}")
    return -math.log2(1 - t - eps)


def hyp_exact_eigenvector(p0: float, eps: float) -> float:
    """D_h^eps for pure rho that is an eigenvector of sigma with eigenvalue p0."""
    if not (0 < p0 <= 1 and 0 <= eps < 1):
        raise ValueError("need 0 < p0 <= 1 and 0 <= eps < 1")
    return -math.log2((1 - eps) * p0)


def knapsack_hyp(p: Sequence[float], q: Sequence[float], eps: float) -> float:
    """Commuting oracle: fractional knapsack over the common eigenbasis.

    Elements are taken in decreasing likelihood ratio ``p/q`` (ties broken by
    ascending ``q``, then index) until ``1 - eps`` of ``p`` is covered.
    Returns the minimal type-II error (not in bits).
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(q > 0, p / np.where(q > 0, q, 1), np.where(p > 0, np.inf, 0.0))
    order = sorted(range(len(p)), key=lambda i: (-ratio[i], q[i], i))
    need = 1.0 - eps
    cost = 0.0
    for i in order:
        if need <= 0:
            break
        if p[i] <= 0:
            continue
        take = min(1.0, need / p[i])
        cost += take * q[i]
        need -= take * p[i]
    return cost

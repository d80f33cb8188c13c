"""Finite truncations: smallest singular values, approximate point spectrum
grids, self-commutator traces and Wold-type splitting of unitary-plus-shift
models.

``W - lam`` is truncated rectangularly: the first ``N`` columns, which live
in ``N + 1`` rows.  A square truncation of a shift is nilpotent, so its
spectrum collapses to ``{0}`` even for the isometry, whose approximate point
spectrum is the unit circle.  The rectangular block keeps every column
exact, and its Gram matrix is tridiagonal.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .classify import class_Ak
from .exact import fraction_str
from .weights import (
    BlockyWeights,
    DerivedWeights,
    ShiftOp,
    dual_weights,
    make_shift,
)


class RankAmbiguityError(ValueError):
    """A singular value fell inside the ambiguity band ``[tol, 10 tol]``."""


class StabilizationError(ValueError):
    """Finite-k proxies for an SOT limit did not settle."""


# -- tridiagonal Gram matrices ------------------------------------------------

@dataclass(frozen=True)
class TridiagGram:
    """Gram matrix of the columns of ``W - lam``.

    The true off-diagonal is ``-lam * w_n``; only ``|lam| w_n`` matters for
    the spectrum (a diagonal unitary similarity rotates the phase away), so
    ``off_diagonal`` stores ``-|lam| w_n``.
    """

    diagonal: np.ndarray
    off_diagonal: np.ndarray

    @property
    def dimension(self) -> int:
        return len(self.diagonal)

    def dense(self) -> np.ndarray:
        return (np.diag(self.diagonal) + np.diag(self.off_diagonal, 1)
                + np.diag(self.off_diagonal, -1))


def gram_of_shifted(W: ShiftOp, lam: complex, N: int) -> TridiagGram:
    if N < 1:
        raise ValueError("N must be >= 1")
    w = np.sqrt(W.weights.sq_array(np.arange(N)))
    a = abs(complex(lam))
    return TridiagGram(a * a + w * w, -a * w[:-1])


def sturm_count(diag: np.ndarray, off_sq: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Number of eigenvalues below ``x`` for a batch of symmetric tridiagonals.

    ``diag`` has shape ``(P, N)``, ``off_sq`` holds squared off-diagonals
    with shape ``(P, N-1)``, ``x`` has shape ``(P,)``.
    """
    tiny = np.finfo(float).tiny ** 0.5
    q = diag[:, 0] - x
    count = (q < 0).astype(np.int64)
    for i in range(1, diag.shape[1]):
        q = np.where(q == 0, tiny, q)
        q = diag[:, i] - x - off_sq[:, i - 1] / q
        count += q < 0
    return count


def smallest_eigenvalue(diag: np.ndarray, off_sq: np.ndarray, tol: float,
                        max_iter: int = 200) -> np.ndarray:
    """Bisection on the Sturm count, batched; absolute tolerance ``tol``."""
    diag = np.atleast_2d(diag)
    off_sq = np.atleast_2d(off_sq) if diag.shape[1] > 1 else np.zeros((diag.shape[0], 0))
    off = np.sqrt(off_sq)
    radius = np.zeros_like(diag)
    radius[:, :-1] += off
    radius[:, 1:] += off
    lo = np.minimum((diag - radius).min(axis=1), 0.0)
    hi = (diag + radius).max(axis=1)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if np.all((mid == lo) | (mid == hi)):
            break
        below = sturm_count(diag, off_sq, mid) >= 1
        hi = np.where(below, mid, hi)
        lo = np.where(below, lo, mid)
        if np.all(hi - lo <= tol):
            break
    return 0.5 * (lo + hi)


def sigma_min_lower(W: ShiftOp, lam: complex, N: int, tol: float = 1e-8) -> float:
    """Smallest singular value of ``(W - lam)`` on the first ``N`` basis vectors.

    Non-increasing in ``N``; tends to ``inf_{||x||=1} ||(W - lam) x||``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    G = gram_of_shifted(W, lam, N)
    ev = smallest_eigenvalue(G.diagonal[None, :], (G.off_diagonal ** 2)[None, :], tol * tol)
    return float(math.sqrt(max(ev[0], 0.0)))


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("SHIFTLAB_THREADS", "1")))
    except ValueError:
        return 1


def sigma_min_batch(W: ShiftOp, lams: Sequence[complex], N: int, tol: float = 1e-8) -> np.ndarray:
    lams = np.asarray(lams, dtype=complex).ravel()
    w = np.sqrt(W.weights.sq_array(np.arange(N)))
    a = np.abs(lams)

    def run(chunk: np.ndarray) -> np.ndarray:
        diag = chunk[:, None] ** 2 + (w * w)[None, :]
        off_sq = (chunk[:, None] * w[None, :-1]) ** 2
        return np.sqrt(np.maximum(smallest_eigenvalue(diag, off_sq, tol * tol), 0.0))

    workers = min(_threads(), max(1, len(a)))
    if workers == 1:
        return run(a)
    chunks = np.array_split(a, workers)
    with ThreadPoolExecutor(workers) as pool:
        return np.concatenate(list(pool.map(run, chunks)))


@dataclass(frozen=True)
class GridSpec:
    re_lo: float
    re_hi: float
    im_lo: float
    im_hi: float
    steps_re: int
    steps_im: int

    @classmethod
    def parse(cls, text: str) -> GridSpec:
        """``re_lo:re_hi:im_lo:im_hi:steps`` or ``...:steps_re:steps_im``."""
        parts = text.split(":")
        if len(parts) not in (5, 6):
            raise ValueError(f"bad grid {text!r}")
        lo_r, hi_r, lo_i, hi_i = map(float, parts[:4])
        sr = int(parts[4])
        si = int(parts[5]) if len(parts) == 6 else sr
        g = cls(lo_r, hi_r, lo_i, hi_i, sr, si)
        g.validate()
        return g

    def validate(self) -> None:
        if not (self.re_lo < self.re_hi and self.im_lo < self.im_hi):
            raise ValueError("grid bounds must be increasing")
        if self.steps_re < 2 or self.steps_im < 2:
            raise ValueError("grid needs at least 2 steps per axis")


@dataclass(frozen=True)
class ApGrid:
    re: np.ndarray
    im: np.ndarray
    sigma_min: np.ndarray
    mask: np.ndarray
    eps: float
    N: int

    def rows(self):
        for r, i, s, m in zip(self.re, self.im, self.sigma_min, self.mask):
            yield float(r), float(i), float(s), bool(m)

    def flagged_moduli(self) -> np.ndarray:
        return np.abs(self.re[self.mask] + 1j * self.im[self.mask])


def ap_spectrum_grid(W: ShiftOp, grid: GridSpec, N: int = 150, eps: float = 0.1,
                     tol: float = 1e-8) -> ApGrid:
    grid.validate()
    xs = np.linspace(grid.re_lo, grid.re_hi, grid.steps_re)
    ys = np.linspace(grid.im_lo, grid.im_hi, grid.steps_im)
    im, re = np.meshgrid(ys, xs, indexing="ij")
    re, im = re.ravel(), im.ravel()
    smin = sigma_min_batch(W, re + 1j * im, N, tol)
    return ApGrid(re, im, smin, smin < eps, eps, N)


# -- self-commutator trace ----------------------------------------------------

@dataclass(frozen=True)
class TraceResult:
    verdict: str
    value: Optional[Fraction]
    abs_sum: Optional[Fraction]
    certificate: str
    partial_sum: Optional[float] = None
    extrapolated: Optional[float] = None

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "value": None if self.value is None else float(self.value),
            "value_exact": None if self.value is None else fraction_str(self.value),
            "trace_norm": None if self.abs_sum is None else float(self.abs_sum),
            "certificate": self.certificate,
            "partial_sum": self.partial_sum,
            "extrapolated": self.extrapolated,
        }


def trace_partial_sums(W: ShiftOp, horizon: int) -> tuple[float, float]:
    """Partial sum of ``w_n^2 - w_{n-1}^2`` up to ``horizon`` and its Richardson limit.

    The partial sums approach the trace like ``c1/M + c2/M**2`` for rational
    generators; combining horizons ``M, M/2, M/4`` cancels both terms.
    """
    sq = W.weights.sq_array(np.arange(horizon + 1))
    diffs = np.diff(np.concatenate(([0.0], sq)))

    def S(m: int) -> float:
        return math.fsum(diffs[: m + 1])

    m = horizon
    s1, s2, s4 = S(m), S(m // 2), S(m // 4)
    return s1, (8 * s1 - 6 * s2 + s4) / 3


def _blocky_certificate(ws, blocks: int = 8) -> Optional[str]:
    """Per-block lower bounds on ``sum |w_n^2 - w_{n-1}^2|`` for blocky sequences."""
    if isinstance(ws, BlockyWeights):
        base, offset, inverted = ws, 0, False
    elif isinstance(ws, DerivedWeights) and isinstance(ws.base, BlockyWeights):
        base, offset, inverted = ws.base, ws.offset, ws.inverted
    else:
        return None
    sup = base.certificate.sup_sq
    # reciprocals shrink each jump by at most a factor sup**2
    factor = 1 / (sup * sup) if inverted else Fraction(1)
    from .weights import blocky_block_start

    parts = []
    for level in range(1, blocks + 1):
        start = blocky_block_start(level)
        length = 2 ** (level + 1) + 1
        jumps = sum(abs(base.sq(n) - base.sq(n - 1)) for n in range(start + 1, start + length))
        if jumps != 1:
            return None
        parts.append(f"block {level}: {length - 1} jumps of 2^-{level + 1} sum to 1")
    first = 1
    while blocky_block_start(first) < offset:
        first += 1
    return (f"every block l >= {first} contributes at least {factor} to sum |w_n^2 - w_(n-1)^2| "
            f"(jumps |a_l^2 - a_(l+1)^2| = 2^-(l+1), 2^(l+1) of them per block); "
            + "; ".join(parts))


def trace_self_commutator(W: ShiftOp, tol: float = 1e-9, horizon: int = 100_000) -> TraceResult:
    ws = W.weights
    c = ws.certificate
    if c.monotone_from is not None and c.limit_sq is not None:
        n0 = c.monotone_from
        prefix = sum(abs(W.sq(n) - (W.sq(n - 1) if n else 0)) for n in range(n0 + 1))
        abs_sum = prefix + abs(W.sq(n0) - c.limit_sq)
        cert = (f"monotone from n={n0} with limit {fraction_str(c.limit_sq)}: "
                f"sum |diag| = {fraction_str(prefix)} + |w_{n0}^2 - L| = {fraction_str(abs_sum)}; "
                f"telescoping trace = lim w_m^2")
        return TraceResult("trace_class", c.limit_sq, abs_sum, cert)
    cert = _blocky_certificate(ws)
    if cert is not None:
        return TraceResult("not_trace_class", None, None, cert)
    s, ext = trace_partial_sums(W, horizon)
    return TraceResult("inconclusive", None, None,
                       f"no tail certificate; partial sums to n={horizon}", s, ext)


@dataclass(frozen=True)
class CareyPincus:
    lhs_shift: float
    lhs_dual: float
    rhs: int
    in_class: Optional[int]
    matches: bool

    def to_json(self) -> dict:
        return {"lhs": {"W": self.lhs_shift, "dual": self.lhs_dual}, "rhs": self.rhs,
                "class_Ak_index": self.in_class, "matches": self.matches}


def carey_pincus_monomial(W: ShiftOp, tol: float = 1e-9, k_max: int = 8) -> CareyPincus:
    """``tr[W'*, W'] = tr[W*, W] = dim ker W* = 1``."""
    t = trace_self_commutator(W, tol)
    td = trace_self_commutator(dual_weights(W), tol)
    if t.value is None or td.value is None:
        raise ValueError(f"{W.label}: trace-class verdict unavailable ({t.verdict}, {td.verdict})")
    member = next((k for k in range(k_max + 1) if class_Ak(W, k).is_true), None)
    lhs, lhs_d = float(t.value), float(td.value)
    ok = abs(lhs - 1) <= tol and abs(lhs_d - 1) <= tol
    return CareyPincus(lhs, lhs_d, 1, member, ok)


# -- unitary (+) shift models ---------------------------------------------------

@dataclass(frozen=True)
class Model:
    """``U (+) W`` with ``U = diag(exp(i theta_j))`` and ``W`` truncated to ``N`` coordinates."""

    phases: tuple
    shift: Optional[ShiftOp]
    N: int

    def __post_init__(self):
        if self.shift is None and self.N != 0:
            raise ValueError("a model without a shift must have N = 0")

    @classmethod
    def from_json(cls, data: dict) -> Model:
        shift = data.get("shift")
        sh = None if shift is None else make_shift(shift)
        return cls(tuple(float(t) for t in data.get("phases", [])), sh,
                   int(data.get("N", 0)) if sh is not None else 0)

    @property
    def d(self) -> int:
        return len(self.phases)

    @property
    def dim(self) -> int:
        return self.d + self.N

    def _weights(self, dual: bool, count: int) -> np.ndarray:
        if self.shift is None or count == 0:
            return np.zeros(0)
        sq = self.shift.weights.sq_array(np.arange(count))
        return 1 / np.sqrt(sq) if dual else np.sqrt(sq)

    def square(self, dual: bool = False) -> np.ndarray:
        """``T`` (or its Cauchy dual) on the first ``d + N`` coordinates."""
        D = self.dim
        M = np.zeros((D, D), dtype=complex)
        M[: self.d, : self.d] = np.diag(np.exp(1j * np.asarray(self.phases)))
        w = self._weights(dual, self.N)
        for n in range(self.N - 1):
            M[self.d + n + 1, self.d + n] = w[n]
        return M

    def dual_power(self, k: int, rows: int) -> np.ndarray:
        """``T'^k`` applied to the first ``d + N`` basis vectors, in ``rows`` coordinates.

        ``rows >= d + N + k`` keeps every image exact (no truncation loss).
        """
        if rows < self.dim + k:
            raise ValueError("not enough rows for an exact power")
        X = np.zeros((rows, self.dim), dtype=complex)
        X[: self.d, : self.d] = np.diag(np.exp(1j * k * np.asarray(self.phases)))
        w = self._weights(True, self.N + k)
        for n in range(self.N):
            X[self.d + n + k, self.d + n] = np.prod(w[n: n + k])
        return X


def _psd_inverse_apply(C: np.ndarray, X: np.ndarray) -> np.ndarray:
    return scipy.linalg.solve(C, X, assume_a="pos")


def range_projection(model: Model, k: int, rows: int) -> np.ndarray:
    """``T'^k C_k^{-1} T'^{*k}`` with ``C_k = T'^{*k} T'^k``."""
    X = model.dual_power(k, rows)
    C = X.conj().T @ X
    return X @ _psd_inverse_apply(C, X.conj().T)


def _classify_unit(values: np.ndarray, tol: float) -> np.ndarray:
    """Which values (in [0, 1]) are 1 to within ``tol``; band ``[tol, 10 tol]`` is an error."""
    gap = 1 - values
    if np.any((gap >= tol) & (gap <= 10 * tol)):
        raise RankAmbiguityError(f"eigenvalue within [{tol}, {10 * tol}] of 1")
    return gap < tol


@dataclass(frozen=True)
class WoldSplit:
    detected_unitary_dim: int
    residual: float
    basis: np.ndarray
    window: int

    def to_json(self) -> dict:
        return {"detected_unitary_dim": self.detected_unitary_dim, "residual": self.residual,
                "observation_window": self.window}


def _observation(model: Model, k_max: int) -> np.ndarray:
    """Coordinates of ``C^d (+) span{e_0, ..., e_{K-1}}`` with ``K = k_max - 1``.

    ``v_{k_max - 1}`` lives on ``span{e_n : n >= k_max - 1}``, so this is the
    largest window on which the last two proxies can agree exactly.
    """
    K = min(k_max - 1, model.N)
    return np.arange(model.d + K)


def _check_model(model: Model, k_max: int) -> None:
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if model.shift is not None and model.N < k_max + 5:
        raise ValueError(f"N = {model.N} too small for k_max = {k_max}; need N >= k_max + 5")


def wold_split(model: Model, k_max: int = 20, tol: float = 1e-8) -> WoldSplit:
    """Detect ``H'_u = cap_k ran T'^k`` on a finite model.

    ``P_k`` (projection onto ``ran T'^k``) decreases strongly to the
    projection onto ``H'_u``; compressing to a fixed observation window of
    leading shift coordinates turns this into a norm statement,
    and the detected subspace is the eigenvalue-1 eigenspace there.
    """
    _check_model(model, k_max)
    rows = model.dim + k_max + 1
    P = range_projection(model, k_max, rows)
    obs = _observation(model, k_max)
    H = P[np.ix_(obs, obs)]
    H = 0.5 * (H + H.conj().T)
    vals, vecs = np.linalg.eigh(H)
    keep = _classify_unit(vals, tol)
    basis = vecs[:, keep]
    Pdet = basis @ basis.conj().T
    Pu = np.zeros_like(Pdet)
    Pu[: model.d, : model.d] = np.eye(model.d)
    residual = float(np.linalg.norm(Pdet - Pu, 2)) if len(obs) else 0.0
    return WoldSplit(int(keep.sum()), residual, basis, len(obs) - model.d)


def min_eigenvalue_hermitian(H: np.ndarray, tol: float = 1e-13) -> float:
    """Smallest eigenvalue: Householder reduction to tridiagonal, then Sturm bisection."""
    if H.shape[0] == 0:
        return math.inf
    H = 0.5 * (H + H.conj().T)
    T = scipy.linalg.hessenberg(H)
    diag = np.real(np.diag(T))
    off_sq = np.abs(np.diag(T, -1)) ** 2
    return float(smallest_eigenvalue(diag[None, :], off_sq[None, :], tol)[0])


@dataclass(frozen=True)
class UVLimits:
    A: np.ndarray
    B: np.ndarray
    A_le_B: bool
    min_eig_B_minus_A: float
    stabilization: float
    closed_form_error: float

    def to_json(self) -> dict:
        def mat(M):
            return [[[float(z.real), float(z.imag)] for z in row] for row in M]

        return {"A": mat(self.A), "B": mat(self.B), "A_le_B": self.A_le_B,
                "min_eig_B_minus_A": None if math.isinf(self.min_eig_B_minus_A)
                else self.min_eig_B_minus_A,
                "stabilization": self.stabilization, "closed_form_error": self.closed_form_error}


def uv_limits(model: Model, k_max: int = 20, tol: float = 1e-8, psd_tol: float = 1e-9,
              stab_tol: float = 1e-8) -> UVLimits:
    """Finite-k proxies for the SOT limits ``A`` and ``B`` on ``H'_u``.

    ``u_k = T'^{k+1} C_k^{-1} T'^{*(k+1)}`` and
    ``v_k = T'^k C_k^{-1} C_{k+1} C_k^{-1} T'^{*k}``.
    """
    _check_model(model, k_max)
    rows = model.dim + k_max + 2
    obs = _observation(model, k_max)

    def uv(k):
        X = model.dual_power(k, rows)
        X1 = model.dual_power(k + 1, rows)
        C = X.conj().T @ X
        C1 = X1.conj().T @ X1
        Ci_X1h = _psd_inverse_apply(C, X1.conj().T)
        u = X1 @ Ci_X1h
        Ci_Xh = _psd_inverse_apply(C, X.conj().T)
        v = Ci_Xh.conj().T @ C1 @ Ci_Xh
        return u[np.ix_(obs, obs)], v[np.ix_(obs, obs)]

    u1, v1 = uv(k_max)
    u0, v0 = uv(k_max - 1)
    stab = 0.0
    if len(obs):
        stab = max(np.linalg.norm(u1 - u0, 2), np.linalg.norm(v1 - v0, 2))
    if stab >= stab_tol:
        raise StabilizationError(f"successive difference {stab:.3e} >= {stab_tol:g} at k={k_max}")

    split = wold_split(model, k_max, tol)
    Q = split.basis
    A = Q.conj().T @ u1 @ Q
    B = Q.conj().T @ v1 @ Q
    # closed forms: A = P T' P T'* P and B = P (T*T)^{-1} P on H'_u
    Td = model.square(dual=True)
    Pfull = np.zeros((model.dim, model.dim), dtype=complex)
    Pfull[np.ix_(obs, obs)] = Q @ Q.conj().T
    A_cf = (Pfull @ Td @ Pfull @ Td.conj().T @ Pfull)[np.ix_(obs, obs)]
    B_cf = (Pfull @ (Td.conj().T @ Td) @ Pfull)[np.ix_(obs, obs)]
    err = 0.0
    if Q.shape[1]:
        err = max(np.linalg.norm(Q.conj().T @ A_cf @ Q - A, 2),
                  np.linalg.norm(Q.conj().T @ B_cf @ Q - B, 2))
    lam = min_eigenvalue_hermitian(B - A)
    return UVLimits(A, B, bool(lam >= -psd_tol), lam, float(stab), float(err))


def _rank_split(s: np.ndarray, tol: float) -> np.ndarray:
    if np.any((s >= tol) & (s <= 10 * tol)):
        raise RankAmbiguityError(f"singular value within [{tol}, {10 * tol}]")
    return s > tol


def range_tprime_k_check(model: Model, k: int, tol: float = 1e-8) -> bool:
    """``ran T'^k`` equals ``cap_{j<k} ker((I - T'T*) T*^j)`` on the truncation."""
    if k == 0:
        return True
    T = model.square()
    Td = model.square(dual=True)
    D = model.dim
    U, s, _ = np.linalg.svd(np.linalg.matrix_power(Td, k))
    rng = U[:, _rank_split(s, tol)]
    defect = np.eye(D) - Td @ T.conj().T
    Ts = T.conj().T
    stack = np.vstack([defect @ np.linalg.matrix_power(Ts, j) for j in range(k)])
    _, s2, Vh = np.linalg.svd(stack)
    s_full = np.zeros(D)
    s_full[: len(s2)] = s2
    ker = Vh.conj().T[:, ~_rank_split(s_full, tol)]
    P1 = rng @ rng.conj().T
    P2 = ker @ ker.conj().T
    return bool(rng.shape[1] == ker.shape[1] and np.linalg.norm(P1 - P2, 2) < tol)

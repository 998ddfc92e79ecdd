"""Block decomposition of a positive semidefinite matrix.

A PSD matrix ``rho`` of order n and rank k is permuted so that

    sigma rho sigma^-1 = [[K, K A], [A^dagger K, A^dagger K A]]

with K (k x k) strictly positive definite and A of shape k x (n - k).
The permutation is found by greedy pivoted Cholesky.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import ConeViolationError, DecompositionError, DimensionError
from .numcore import RANK_TOL, as_square, hermitize, is_psd


@dataclass(frozen=True)
class Permutation:
    """Basis permutation; ``map[new_position] = old_index``.

    Conjugation ``(sigma M sigma^-1)[i, j] == M[map[i], map[j]]``.
    """

    map: tuple[int, ...]

    def __post_init__(self):
        m = tuple(int(i) for i in self.map)
        if sorted(m) != list(range(len(m))):
            raise ValueError(f"not a permutation of 0..{len(m) - 1}: {m}")
        object.__setattr__(self, "map", m)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @property
    def n(self) -> int:
        return len(self.map)

    def conjugate(self, M) -> np.ndarray:
        """sigma M sigma^-1."""
        idx = np.asarray(self.map, dtype=int)
        return np.asarray(M)[np.ix_(idx, idx)]

    def unconjugate(self, P) -> np.ndarray:
        """sigma^-1 P sigma, the inverse of :meth:`conjugate`."""
        P = np.asarray(P)
        idx = np.asarray(self.map, dtype=int)
        out = np.empty_like(P)
        out[np.ix_(idx, idx)] = P
        return out

    def matrix(self) -> np.ndarray:
        """The permutation matrix S with S M S^T == conjugate(M)."""
        S = np.zeros((self.n, self.n))
        S[np.arange(self.n), self.map] = 1.0
        return S


@dataclass(frozen=True)
class BlockDecomposition:
    perm: Permutation
    k: int
    K: np.ndarray
    A: np.ndarray

    def __post_init__(self):
        for arr in (self.K, self.A):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.perm.n

    def range_factor(self) -> np.ndarray:
        """The n x k matrix sigma^-1 [I_k; A^dagger] (in original coordinates)."""
        F = np.vstack([np.eye(self.k, dtype=complex), self.A.conj().T])
        out = np.empty_like(F)
        out[np.asarray(self.perm.map, dtype=int)] = F
        return out

    def lift(self, L) -> np.ndarray:
        """sigma^-1 [[L, L A], [A^dagger L, A^dagger L A]] sigma for a k x k matrix L."""
        L = np.asarray(L, dtype=complex)
        if L.shape != (self.k, self.k):
            raise DimensionError(f"expected a {self.k}x{self.k} matrix, got {L.shape}")
        F = self.range_factor()
        return F @ L @ F.conj().T

    def with_K(self, K_new) -> "BlockDecomposition":
        return BlockDecomposition(self.perm, self.k, np.array(K_new, dtype=complex), self.A.copy())


def _schur_pivots(rho: np.ndarray, tol: float) -> list[int]:
    n = rho.shape[0]
    diag = rho.diagonal().real.copy()
    scale = float(np.max(diag)) if n else 0.0
    if scale <= 0:
        return []
    # columns of the partial Cholesky factor, one per accepted pivot
    cols: list[np.ndarray] = []
    pivots: list[int] = []
    remaining = diag.copy()
    for _ in range(n):
        masked = remaining.copy()
        masked[pivots] = -np.inf
        p = int(np.argmax(masked))  # first maximum -> lowest index on ties
        if masked[p] <= tol * scale:
            break
        col = rho[:, p].copy()
        for c in cols:
            col -= c * np.conj(c[p])
        col /= np.sqrt(remaining[p])
        cols.append(col)
        pivots.append(p)
        remaining = remaining - np.abs(col) ** 2
    return pivots


def select_pivots(rho, tol: float = RANK_TOL) -> list[int]:
    """Greedy pivoted-Cholesky pivot order.

    Repeatedly take the index with the largest remaining Schur-complement
    diagonal; stop once it drops to ``tol`` times the largest original diagonal.
    """
    M = hermitize(rho)
    if not is_psd(M, tol):
        raise ConeViolationError("matrix is not positive semidefinite within tolerance")
    return _schur_pivots(M, tol)


def block_decompose(
    rho, tol: float = RANK_TOL, pivots: Sequence[int] | None = None
) -> BlockDecomposition:
    """Decompose a PSD matrix into (sigma, K, A).

    ``pivots`` overrides the greedy choice; any index set whose principal
    submatrix is nonsingular gives the same range and hence the same
    extremality answer.
    """
    M = hermitize(as_square(rho, "rho"))
    n = M.shape[0]
    if n == 0:
        raise DimensionError("empty matrix")
    if pivots is None:
        pivots = select_pivots(M, tol)
    else:
        pivots = [int(p) for p in pivots]
        if len(set(pivots)) != len(pivots) or any(p < 0 or p >= n for p in pivots):
            raise ValueError(f"invalid pivot set {pivots}")
    k = len(pivots)
    if k == 0:
        raise DecompositionError("matrix is numerically zero")
    rest = [i for i in range(n) if i not in set(pivots)]
    perm = Permutation(tuple(pivots) + tuple(rest))
    P = perm.conjugate(M)
    K = hermitize(P[:k, :k])
    evals = np.linalg.eigvalsh(K)
    if evals[0] <= tol * evals[-1]:
        raise DecompositionError(
            f"K is numerically singular (lambda_min={evals[0]:.3e}, lambda_max={evals[-1]:.3e})"
        )
    A = np.linalg.solve(K, P[:k, k:]) if k < n else np.zeros((k, 0), dtype=complex)
    return BlockDecomposition(perm, k, K, A)


def reconstruct(dec: BlockDecomposition) -> np.ndarray:
    """sigma^-1 [[K, K A], [A^dagger K, A^dagger K A]] sigma."""
    return hermitize(dec.lift(dec.K))

"""Dense complex-matrix primitives.

Basis convention: the product basis vector e_i (x) f_j of H1 (x) H2 lives at
0-based index ``i * d2 + j``, i.e. lexicographic order of the pairs (i, j).
``numpy.kron`` and every reshape in this package follow that order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError

#: Relative tolerance for rank and positive-definiteness decisions.
RANK_TOL = 1e-9
#: Max-norm tolerance for membership checks (looser than RANK_TOL on purpose).
MEMBERSHIP_TOL = 1e-8


@dataclass(frozen=True)
class DimensionPair:
    """Local dimensions (d1, d2) of a bipartite system."""

    d1: int
    d2: int

    def __post_init__(self):
        if int(self.d1) < 1 or int(self.d2) < 1:
            raise DimensionError(f"dimensions must be >= 1, got ({self.d1}, {self.d2})")
        object.__setattr__(self, "d1", int(self.d1))
        object.__setattr__(self, "d2", int(self.d2))

    @property
    def n(self) -> int:
        return self.d1 * self.d2

    def index(self, i: int, j: int) -> int:
        """0-based position of e_i (x) f_j."""
        return i * self.d2 + j


def as_square(H, name: str = "matrix") -> np.ndarray:
    M = np.asarray(H, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    return M


def hermitize(H) -> np.ndarray:
    """Return the hermitian part (H + H^dagger) / 2."""
    M = as_square(H)
    return (M + M.conj().T) / 2


def max_norm(X) -> float:
    X = np.asarray(X)
    return float(np.max(np.abs(X))) if X.size else 0.0


def eigh(H) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a hermitian matrix, eigenvalues ascending.

    Only the lower triangle is read, as in LAPACK ``zheevd``.
    """
    M = as_square(H)
    if M.shape[0] == 0:
        return np.zeros(0), np.zeros((0, 0), dtype=complex)
    return np.linalg.eigh(M)


def _rank_threshold(evals: np.ndarray, tol: float) -> float:
    scale = max(1.0, float(np.max(np.abs(evals)))) if evals.size else 1.0
    return tol * scale


def rank_eps(H, tol: float = RANK_TOL) -> int:
    """Number of eigenvalues with ``|lambda| > tol * max(1, max|lambda|)``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    evals = np.linalg.eigvalsh(as_square(H)) if np.asarray(H).size else np.zeros(0)
    return int(np.sum(np.abs(evals) > _rank_threshold(evals, tol)))


def is_psd(H, tol: float = RANK_TOL) -> bool:
    if tol < 0:
        raise ValueError("tol must be non-negative")
    M = as_square(H)
    if M.shape[0] == 0:
        return True
    evals = np.linalg.eigvalsh(hermitize(M))
    return bool(evals[0] >= -_rank_threshold(evals, tol))


def kron(A, B) -> np.ndarray:
    return np.kron(np.asarray(A, dtype=complex), np.asarray(B, dtype=complex))


def _check_bipartite(X, dims: DimensionPair) -> np.ndarray:
    M = np.asarray(X, dtype=complex)
    if M.shape != (dims.n, dims.n):
        raise DimensionError(
            f"expected a {dims.n}x{dims.n} operator for dims ({dims.d1}, {dims.d2}), got {M.shape}"
        )
    return M


def partial_trace_over_2(X, dims: DimensionPair) -> np.ndarray:
    """Marginal on H1: ``(Tr_2 X)[i, i'] = sum_j X[g_ij, g_i'j]``."""
    M = _check_bipartite(X, dims).reshape(dims.d1, dims.d2, dims.d1, dims.d2)
    return np.einsum("ijkj->ik", M)


def partial_trace_over_1(X, dims: DimensionPair) -> np.ndarray:
    """Marginal on H2: ``(Tr_1 X)[j, j'] = sum_i X[g_ij, g_ij']``."""
    M = _check_bipartite(X, dims).reshape(dims.d1, dims.d2, dims.d1, dims.d2)
    return np.einsum("ijil->jl", M)


def _offdiag_pairs(d: int):
    return [(i, j) for i in range(d) for j in range(i + 1, d)]


def hermitian_basis(d: int) -> list[np.ndarray]:
    """Orthonormal basis (under Tr XY) of the d x d hermitian matrices.

    Order: the d diagonal units E_ii, then for each pair i < j the symmetric
    (E_ij + E_ji)/sqrt2 followed by the antisymmetric i(E_ij - E_ji)/sqrt2.
    ``vec_hermitian`` maps the m-th element to the m-th unit vector.
    """
    if d < 1:
        raise DimensionError("d must be >= 1")
    basis = []
    for i in range(d):
        E = np.zeros((d, d), dtype=complex)
        E[i, i] = 1.0
        basis.append(E)
    s = 1 / math.sqrt(2)
    for i, j in _offdiag_pairs(d):
        S = np.zeros((d, d), dtype=complex)
        S[i, j] = S[j, i] = s
        basis.append(S)
        T = np.zeros((d, d), dtype=complex)
        T[i, j] = 1j * s
        T[j, i] = -1j * s
        basis.append(T)
    return basis


def vec_hermitian(M) -> np.ndarray:
    """Real coordinates of a hermitian matrix; an isometry for the Frobenius product.

    ``(M_ii for all i)`` followed by ``(sqrt2 Re M_ij, sqrt2 Im M_ij)`` for i < j.
    """
    M = as_square(M)
    d = M.shape[0]
    iu, ju = np.triu_indices(d, k=1)
    upper = M[iu, ju] * math.sqrt(2)
    out = np.empty(d * d)
    out[:d] = M.diagonal().real
    out[d::2] = upper.real
    out[d + 1 :: 2] = upper.imag
    return out


def unvec_hermitian(v) -> np.ndarray:
    """Inverse of :func:`vec_hermitian`."""
    v = np.asarray(v, dtype=float)
    d = math.isqrt(v.size)
    if d * d != v.size:
        raise DimensionError(f"length {v.size} is not a perfect square")
    M = np.diag(v[:d]).astype(complex)
    iu, ju = np.triu_indices(d, k=1)
    upper = (v[d::2] + 1j * v[d + 1 :: 2]) / math.sqrt(2)
    M[iu, ju] = upper
    M[ju, iu] = upper.conj()
    return M


def real_rank_and_complement(rows: np.ndarray, dim: int, tol: float = RANK_TOL):
    """Rank of the row space of ``rows`` (m x dim, real) and an orthonormal basis of its complement.

    Singular values above ``tol * sigma_max`` count toward the rank.
    """
    rows = np.asarray(rows, dtype=float).reshape(-1, dim)
    if rows.shape[0] == 0:
        return 0, np.eye(dim)
    _, s, vh = np.linalg.svd(rows, full_matrices=True)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > tol * smax)) if smax > 0 else 0
    return rank, vh[rank:]

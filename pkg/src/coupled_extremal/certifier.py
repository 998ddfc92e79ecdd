"""Extremality certification in C(rho1, rho2).

A member rho of rank k with block decomposition (sigma, K, A) is extremal
iff the real span D of the compressed operators

    [I | A] sigma (X1 (x) I + I (x) X2) sigma^-1 [I ; A^dagger]

is all of the k x k hermitian matrices.  A nonzero L orthogonal to D lifts
to a zero-marginal perturbation supported on the range of rho, and
rho +/- eps * lift(L) are two distinct members averaging to rho.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .decomp import BlockDecomposition, block_decompose
from .exceptions import (
    DegenerateDirectionError,
    DimensionError,
    InvalidDirectionError,
    NotInCError,
)
from .numcore import (
    MEMBERSHIP_TOL,
    RANK_TOL,
    DimensionPair,
    eigh,
    hermitian_basis,
    hermitize,
    is_psd,
    kron,
    max_norm,
    partial_trace_over_1,
    partial_trace_over_2,
    rank_eps,
    real_rank_and_complement,
    unvec_hermitian,
    vec_hermitian,
)


def _frozen(M) -> np.ndarray:
    arr = np.array(M, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MarginalPair:
    """Target marginals (rho1 on H1, rho2 on H2), each PSD with unit trace."""

    rho1: np.ndarray
    rho2: np.ndarray
    tol: float = MEMBERSHIP_TOL

    def __post_init__(self):
        for name in ("rho1", "rho2"):
            M = np.asarray(getattr(self, name), dtype=complex)
            if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
                raise DimensionError(f"{name} must be a non-empty square matrix, got {M.shape}")
            if max_norm(M - M.conj().T) > self.tol:
                raise ValueError(f"{name} is not hermitian")
            if not is_psd(M, self.tol):
                raise ValueError(f"{name} is not positive semidefinite")
            if abs(np.trace(M).real - 1) > self.tol:
                raise ValueError(f"{name} does not have unit trace")
            object.__setattr__(self, name, _frozen(hermitize(M)))

    @classmethod
    def maximally_mixed(cls, d1: int, d2: int) -> "MarginalPair":
        return cls(np.eye(d1) / d1, np.eye(d2) / d2)

    @classmethod
    def of(cls, rho, dims: DimensionPair) -> "MarginalPair":
        """The marginals of rho itself."""
        return cls(partial_trace_over_2(rho, dims), partial_trace_over_1(rho, dims))

    @property
    def dims(self) -> DimensionPair:
        return DimensionPair(self.rho1.shape[0], self.rho2.shape[0])

    def is_singleton(self, tol: float = RANK_TOL) -> bool:
        """True when C(rho1, rho2) = {rho1 (x) rho2}, i.e. some marginal is pure."""
        return rank_eps(self.rho1, tol) == 1 or rank_eps(self.rho2, tol) == 1


@dataclass(frozen=True)
class Violation:
    """Reason a matrix is not in C(rho1, rho2)."""

    kind: str
    magnitude: float

    def __str__(self):
        return f"{self.kind}, magnitude {self.magnitude:.6g}"


def validate_membership(rho, marginals: MarginalPair, tol: float = MEMBERSHIP_TOL) -> Violation | None:
    """Return None if rho is in C(rho1, rho2) within ``tol`` (max-norm), else the first violation."""
    dims = marginals.dims
    M = np.asarray(rho, dtype=complex)
    if M.shape != (dims.n, dims.n):
        return Violation("shape mismatch", float("inf"))
    herm = max_norm(M - M.conj().T)
    if herm > tol:
        return Violation("not hermitian", herm)
    H = hermitize(M)
    lam_min = float(np.linalg.eigvalsh(H)[0])
    if lam_min < -tol:
        return Violation("not positive semidefinite", -lam_min)
    tr = abs(np.trace(H).real - 1.0)
    if tr > tol:
        return Violation("trace mismatch", tr)
    m1 = max_norm(partial_trace_over_2(H, dims) - marginals.rho1)
    if m1 > tol:
        return Violation("marginal-1 mismatch", m1)
    m2 = max_norm(partial_trace_over_1(H, dims) - marginals.rho2)
    if m2 > tol:
        return Violation("marginal-2 mismatch", m2)
    return None


def _local_operator_basis(dims: DimensionPair) -> list[np.ndarray]:
    I1 = np.eye(dims.d1)
    I2 = np.eye(dims.d2)
    ops = [kron(X, I2) for X in hermitian_basis(dims.d1)]
    ops += [kron(I1, X) for X in hermitian_basis(dims.d2)]
    return ops


def perturbation_generators(dec: BlockDecomposition, dims: DimensionPair) -> list[np.ndarray]:
    """Spanning set of D: the compressions of X1 (x) I and I (x) X2 over hermitian bases.

    Returns d1^2 + d2^2 hermitian k x k matrices; the identity appears twice,
    so they span at most d1^2 + d2^2 - 1 dimensions.
    """
    if dec.n != dims.n:
        raise DimensionError(f"decomposition has order {dec.n}, dims give {dims.n}")
    k = dec.k
    A = dec.A
    Ad = A.conj().T
    gens = []
    for X in _local_operator_basis(dims):
        Y = dec.perm.conjugate(X)
        Y11, Y12 = Y[:k, :k], Y[:k, k:]
        Y21, Y22 = Y[k:, :k], Y[k:, k:]
        M = Y11 + Y12 @ Ad + A @ Y21 + A @ Y22 @ Ad
        gens.append(hermitize(M))
    return gens


def d_space_rank(generators, tol: float = RANK_TOL) -> tuple[int, list[np.ndarray]]:
    """Real dimension of span(generators) and an orthonormal basis of its complement."""
    generators = list(generators)
    if not generators:
        raise ValueError("need at least one generator")
    k = generators[0].shape[0]
    rows = np.array([vec_hermitian(G) for G in generators])
    dim_d, complement = real_rank_and_complement(rows, k * k, tol)
    return dim_d, [unvec_hermitian(v) for v in complement]


@dataclass(frozen=True)
class PerturbationSpaceReport:
    k: int
    dim_d: int
    generators: tuple = field(repr=False)
    dperp_basis: tuple = field(repr=False)
    decomposition: BlockDecomposition | None = field(default=None, repr=False)

    @property
    def k_squared(self) -> int:
        return self.k * self.k

    @property
    def dperp_dim(self) -> int:
        return len(self.dperp_basis)


def perturbation_report(
    dec: BlockDecomposition, dims: DimensionPair, tol: float = RANK_TOL
) -> PerturbationSpaceReport:
    gens = perturbation_generators(dec, dims)
    dim_d, dperp = d_space_rank(gens, tol)
    return PerturbationSpaceReport(dec.k, dim_d, tuple(gens), tuple(dperp), dec)


@dataclass(frozen=True)
class NonExtremalityWitness:
    """rho = (rho_plus + rho_minus) / 2 with rho_plus != rho_minus, both in C."""

    L: np.ndarray
    epsilon: float
    rho_plus: np.ndarray
    rho_minus: np.ndarray

    def check(self, rho, marginals: MarginalPair, tol: float = MEMBERSHIP_TOL) -> list[str]:
        """List every violated witness invariant (empty when the witness is valid)."""
        problems = []
        mid = max_norm((self.rho_plus + self.rho_minus) / 2 - np.asarray(rho))
        if mid > tol:
            problems.append(f"midpoint differs from rho by {mid:.3e}")
        for name, state in (("rho_plus", self.rho_plus), ("rho_minus", self.rho_minus)):
            v = validate_membership(state, marginals, tol)
            if v is not None:
                problems.append(f"{name}: {v}")
        if max_norm(self.rho_plus - self.rho_minus) <= 1e-10:
            problems.append("rho_plus and rho_minus coincide")
        return problems


@dataclass(frozen=True)
class Extremal:
    report: PerturbationSpaceReport
    singleton: bool = False


@dataclass(frozen=True)
class NotExtremal:
    witness: NonExtremalityWitness
    report: PerturbationSpaceReport
    route: str  # "full_rank" or "d_space"


@dataclass(frozen=True)
class NotInC:
    violation: Violation


ExtremalityVerdict = Union[Extremal, NotExtremal, NotInC]


def make_witness(
    rho,
    dec: BlockDecomposition,
    L,
    dims: DimensionPair,
    tol: float = MEMBERSHIP_TOL,
) -> NonExtremalityWitness:
    """Turn a direction L in D-perp into two members of C averaging to rho.

    The step is eps = lambda_min(K) / (2 ||L||_2), which keeps K +/- eps L
    positive definite with a factor-two margin.
    """
    L = hermitize(L)
    if L.shape != (dec.k, dec.k):
        raise DimensionError(f"L must be {dec.k}x{dec.k}, got {L.shape}")
    spec = float(np.linalg.norm(L, 2))
    if spec <= RANK_TOL:
        raise DegenerateDirectionError("L is numerically zero")
    lifted = hermitize(dec.lift(L))
    leak = max(
        max_norm(partial_trace_over_2(lifted, dims)),
        max_norm(partial_trace_over_1(lifted, dims)),
    )
    if leak > tol * max(1.0, max_norm(lifted)):
        raise InvalidDirectionError(f"lifted direction has marginal leak {leak:.3e}")
    lam_min = float(np.linalg.eigvalsh(dec.K)[0])
    eps = 0.5 * lam_min / spec
    rho = hermitize(rho)
    return NonExtremalityWitness(
        L=_frozen(L),
        epsilon=eps,
        rho_plus=_frozen(rho + eps * lifted),
        rho_minus=_frozen(rho - eps * lifted),
    )


def _traceless_pair(d: int) -> np.ndarray:
    L = np.zeros((d, d), dtype=complex)
    L[0, 0], L[1, 1] = 1.0, -1.0
    return L


def full_rank_direction(dims: DimensionPair) -> np.ndarray:
    """A product of traceless hermitian operators; both its marginals vanish."""
    if dims.d1 < 2 or dims.d2 < 2:
        raise DimensionError("needs d1, d2 >= 2")
    return kron(_traceless_pair(dims.d1), _traceless_pair(dims.d2))


def clip_to_cone(rho) -> np.ndarray:
    """Hermitian part of rho with negative eigenvalues set to zero (no-op when already PSD)."""
    H = hermitize(rho)
    evals, vecs = eigh(H)
    if evals[0] >= 0:
        return H
    return hermitize((vecs * np.clip(evals, 0, None)) @ vecs.conj().T)


def check_extremal(
    rho,
    marginals: MarginalPair,
    tol: float = MEMBERSHIP_TOL,
    rank_tol: float = RANK_TOL,
) -> ExtremalityVerdict:
    """Decide whether rho is an extreme point of C(rho1, rho2)."""
    dims = marginals.dims
    violation = validate_membership(rho, marginals, tol)
    if violation is not None:
        return NotInC(violation)
    rho = clip_to_cone(rho)
    dec = block_decompose(rho, rank_tol)
    report = perturbation_report(dec, dims, rank_tol)
    if dims.n == 1 or marginals.is_singleton(rank_tol):
        return Extremal(report, singleton=True)
    if dec.k == dims.n:
        L = dec.perm.conjugate(full_rank_direction(dims))
        return NotExtremal(make_witness(rho, dec, L, dims, tol), report, "full_rank")
    if report.dim_d == report.k_squared:
        return Extremal(report)
    return NotExtremal(make_witness(rho, dec, report.dperp_basis[0], dims, tol), report, "d_space")


def range_basis(rho, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal eigenvectors (columns) of rho with eigenvalue above the rank threshold."""
    evals, vecs = eigh(hermitize(rho))
    scale = max(1.0, float(np.max(np.abs(evals))))
    return vecs[:, evals > tol * scale]


def oracle_nullity(rho, dims: DimensionPair, tol: float = RANK_TOL) -> int:
    """Dimension of {L hermitian on range(rho) : both marginals of S L S^dagger vanish}."""
    S = range_basis(rho, tol)
    k = S.shape[1]
    Sd = S.conj().T
    columns = []
    for B in hermitian_basis(k):
        Delta = S @ B @ Sd
        columns.append(
            np.concatenate(
                [
                    vec_hermitian(hermitize(partial_trace_over_2(Delta, dims))),
                    vec_hermitian(hermitize(partial_trace_over_1(Delta, dims))),
                ]
            )
        )
    rank, _ = real_rank_and_complement(np.array(columns), dims.d1**2 + dims.d2**2, tol)
    return k * k - rank


def oracle_extremal(
    rho,
    marginals: MarginalPair,
    tol: float = MEMBERSHIP_TOL,
    rank_tol: float = RANK_TOL,
) -> bool:
    """Independent extremality test on an orthonormal range basis (no pivoting, no K/A)."""
    violation = validate_membership(rho, marginals, tol)
    if violation is not None:
        raise NotInCError(violation)
    return oracle_nullity(rho, marginals.dims, rank_tol) == 0


def rank_bound(dims: DimensionPair) -> int:
    """floor(sqrt(d1^2 + d2^2 - 1)), the largest rank an extreme point can have."""
    return math.isqrt(dims.d1**2 + dims.d2**2 - 1)

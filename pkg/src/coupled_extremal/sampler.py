"""Sampling members of C(rho1, rho2) and walking them down to extreme points."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .certifier import (
    Extremal,
    MarginalPair,
    NotInC,
    check_extremal,
    clip_to_cone,
)
from .decomp import BlockDecomposition, block_decompose, reconstruct
from .exceptions import NotInCError, UnboundedDirectionError, WalkError
from .numcore import (
    MEMBERSHIP_TOL,
    RANK_TOL,
    DimensionPair,
    eigh,
    hermitian_basis,
    hermitize,
    kron,
    max_norm,
    partial_trace_over_1,
    partial_trace_over_2,
    rank_eps,
    unvec_hermitian,
    vec_hermitian,
)

log = logging.getLogger(__name__)

# membership drift above this is pushed back after each walk step
DRIFT_TOL = 1e-10


def marginal_map(dims: DimensionPair) -> np.ndarray:
    """Real matrix taking vec_hermitian(Delta) to (vec Tr_2 Delta, vec Tr_1 Delta)."""
    cols = []
    for B in hermitian_basis(dims.n):
        cols.append(
            np.concatenate(
                [
                    vec_hermitian(partial_trace_over_2(B, dims)),
                    vec_hermitian(partial_trace_over_1(B, dims)),
                ]
            )
        )
    return np.array(cols).T


def zero_marginal_basis(dims: DimensionPair) -> list[np.ndarray]:
    """Orthonormal basis of the hermitian n x n matrices whose marginals both vanish.

    Its size is n^2 - d1^2 - d2^2 + 1.
    """
    null = scipy.linalg.null_space(marginal_map(dims), rcond=RANK_TOL)
    return [unvec_hermitian(v) for v in null.T]


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """G G^dagger / Tr for a complex Gaussian d x rank matrix G."""
    rank = d if rank is None else rank
    G = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = G @ G.conj().T
    return hermitize(rho / np.trace(rho).real)


def sample_interior(marginals: MarginalPair, seed=None, spread: float = 0.5) -> np.ndarray:
    """rho1 (x) rho2 plus a random zero-marginal perturbation.

    The perturbation has spectral norm ``spread * lambda_min(rho1 (x) rho2)``,
    so the sample keeps at least a ``1 - spread`` fraction of that minimum
    eigenvalue.  Both marginals must be strictly positive definite.
    """
    if not 0 <= spread < 1:
        raise ValueError("spread must lie in [0, 1)")
    dims = marginals.dims
    for name, M in (("rho1", marginals.rho1), ("rho2", marginals.rho2)):
        if rank_eps(M) < M.shape[0]:
            raise ValueError(
                f"{name} is singular; sampling needs strictly positive marginals "
                "(start extremize from a member you construct yourself instead)"
            )
    rng = np.random.default_rng(seed)
    base = kron(marginals.rho1, marginals.rho2)
    lam0 = float(np.linalg.eigvalsh(base)[0])
    basis = zero_marginal_basis(dims)
    if not basis or spread == 0:
        return hermitize(base)
    coeffs = rng.standard_normal(len(basis))
    Delta = hermitize(sum(c * B for c, B in zip(coeffs, basis)))
    Delta *= spread * lam0 / np.linalg.norm(Delta, 2)
    return hermitize(base + Delta)


def max_step(K, L, tol: float = RANK_TOL) -> float:
    """Largest t with K + t L positive semidefinite (K positive definite)."""
    K = hermitize(K)
    L = hermitize(L)
    evals, vecs = eigh(K)
    K_inv_half = (vecs / np.sqrt(evals)) @ vecs.conj().T
    M = hermitize(K_inv_half @ L @ K_inv_half)
    mu = float(np.linalg.eigvalsh(-M)[-1])
    if mu <= tol:
        raise UnboundedDirectionError(f"K + tL stays positive definite for all t > 0 (mu={mu:.3e})")
    return 1.0 / mu


@dataclass(frozen=True)
class WalkStep:
    rank_before: int
    t_star: float
    rank_after: int


@dataclass
class FacialWalkTrace:
    start_rank: int
    steps: list[WalkStep] = field(default_factory=list)
    final: np.ndarray | None = None
    verdict: Extremal | None = None


def _repair_marginals(rho: np.ndarray, marginals: MarginalPair, rank_tol: float) -> np.ndarray:
    """Remove marginal drift with a least-squares correction supported on range(rho)."""
    dims = marginals.dims
    drift1 = hermitize(partial_trace_over_2(rho, dims)) - marginals.rho1
    drift2 = hermitize(partial_trace_over_1(rho, dims)) - marginals.rho2
    if max(max_norm(drift1), max_norm(drift2)) <= DRIFT_TOL:
        return rho
    dec = block_decompose(rho, rank_tol)
    columns = []
    basis = hermitian_basis(dec.k)
    for B in basis:
        lifted = dec.lift(B)
        columns.append(
            np.concatenate(
                [
                    vec_hermitian(hermitize(partial_trace_over_2(lifted, dims))),
                    vec_hermitian(hermitize(partial_trace_over_1(lifted, dims))),
                ]
            )
        )
    target = -np.concatenate([vec_hermitian(drift1), vec_hermitian(drift2)])
    coef, *_ = np.linalg.lstsq(np.array(columns).T, target, rcond=None)
    L = sum(c * B for c, B in zip(coef, basis))
    return hermitize(reconstruct(dec.with_K(dec.K + L)))


def _snap(dec: BlockDecomposition, K_new: np.ndarray, rank_tol: float) -> np.ndarray:
    """Rebuild rho from K_new after zeroing eigenvalues that hit the boundary."""
    evals, vecs = eigh(hermitize(K_new))
    evals = np.where(evals <= rank_tol * max(1.0, evals[-1]), 0.0, evals)
    K_clean = hermitize((vecs * evals) @ vecs.conj().T)
    return reconstruct(dec.with_K(K_clean))


def extremize(
    rho,
    marginals: MarginalPair,
    seed=None,
    tol: float = MEMBERSHIP_TOL,
    rank_tol: float = RANK_TOL,
    max_steps: int | None = None,
) -> FacialWalkTrace:
    """Walk rho to an extreme point of C(rho1, rho2) by ray shooting along D-perp directions.

    Each step moves to the PSD boundary along a seeded random unit direction
    in D-perp, which keeps the marginals and strictly lowers the rank.  With
    ``max_steps`` the walk may stop early at a non-extremal member.
    """
    rng = np.random.default_rng(seed)
    dims = marginals.dims
    verdict = check_extremal(rho, marginals, tol, rank_tol)
    if isinstance(verdict, NotInC):
        raise NotInCError(verdict.violation)
    current = clip_to_cone(rho)
    trace = FacialWalkTrace(start_rank=verdict.report.k)
    while not isinstance(verdict, Extremal):
        if max_steps is not None and len(trace.steps) >= max_steps:
            break
        if len(trace.steps) >= dims.n:
            raise WalkError("walk exceeded n steps", trace)
        report = verdict.report
        dec = report.decomposition
        coeffs = rng.standard_normal(report.dperp_dim)
        coeffs /= np.linalg.norm(coeffs)
        L = hermitize(sum(c * B for c, B in zip(coeffs, report.dperp_basis)))
        t_star = max_step(dec.K, L, rank_tol)
        candidate = _snap(dec, dec.K + t_star * L, rank_tol)
        candidate = _repair_marginals(candidate, marginals, rank_tol)
        new_verdict = check_extremal(candidate, marginals, tol, rank_tol)
        if isinstance(new_verdict, NotInC):
            raise WalkError(f"walk left C: {new_verdict.violation}", trace)
        step = WalkStep(report.k, t_star, new_verdict.report.k)
        log.debug("walk step %s", step)
        if step.rank_after >= step.rank_before:
            raise WalkError(f"rank did not decrease ({step.rank_before} -> {step.rank_after})", trace)
        trace.steps.append(step)
        current, verdict = candidate, new_verdict
    trace.final = current
    trace.verdict = verdict if isinstance(verdict, Extremal) else None
    return trace

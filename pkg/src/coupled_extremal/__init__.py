"""Extreme points of the convex set of bipartite states with fixed marginals."""

from .certifier import (
    Extremal,
    ExtremalityVerdict,
    MarginalPair,
    NonExtremalityWitness,
    NotExtremal,
    NotInC,
    PerturbationSpaceReport,
    Violation,
    check_extremal,
    d_space_rank,
    make_witness,
    oracle_extremal,
    perturbation_generators,
    rank_bound,
    validate_membership,
)
from .decomp import BlockDecomposition, Permutation, block_decompose, reconstruct, select_pivots
from .numcore import MEMBERSHIP_TOL, RANK_TOL, DimensionPair
from .sampler import FacialWalkTrace, extremize, max_step, sample_interior, zero_marginal_basis

__version__ = "0.1.0"

__all__ = [
    "BlockDecomposition",
    "DimensionPair",
    "Extremal",
    "ExtremalityVerdict",
    "FacialWalkTrace",
    "MEMBERSHIP_TOL",
    "MarginalPair",
    "NonExtremalityWitness",
    "NotExtremal",
    "NotInC",
    "Permutation",
    "PerturbationSpaceReport",
    "RANK_TOL",
    "Violation",
    "block_decompose",
    "check_extremal",
    "d_space_rank",
    "extremize",
    "make_witness",
    "max_step",
    "oracle_extremal",
    "perturbation_generators",
    "rank_bound",
    "reconstruct",
    "sample_interior",
    "select_pivots",
    "validate_membership",
    "zero_marginal_basis",
]

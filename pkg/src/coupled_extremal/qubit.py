"""Two-qubit case with both marginals equal to I/2.

The extreme points of C(I/2, I/2) are exactly the projectors onto
(|0>|psi_0> + |1>|psi_1>)/sqrt2 for an orthonormal basis {psi_0, psi_1};
every rank-2 member is a proper mixture.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .certifier import MarginalPair
from .exceptions import SpecError
from .numcore import (
    MEMBERSHIP_TOL,
    RANK_TOL,
    DimensionPair,
    is_psd,
    max_norm,
    partial_trace_over_1,
    partial_trace_over_2,
    rank_eps,
)

QUBITS = DimensionPair(2, 2)
HALF_I = np.eye(2) / 2


def half_identity_marginals() -> MarginalPair:
    return MarginalPair(HALF_I, HALF_I)


@dataclass(frozen=True)
class MaxEntangledSpec:
    """Unitary u with psi_x = sum_y u[x, y] |y>."""

    u: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=complex)
        if u.shape != (2, 2):
            raise SpecError(f"u must be 2x2, got {u.shape}")
        if max_norm(u.conj().T @ u - np.eye(2)) > 1e-10:
            raise SpecError("u is not unitary")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)


def haar_unitary(rng: np.random.Generator, d: int = 2) -> np.ndarray:
    """Haar-random unitary from the QR factorization of a complex Ginibre matrix."""
    Z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    phases = np.diag(R) / np.abs(np.diag(R))
    return Q * phases


def max_entangled(spec: MaxEntangledSpec) -> np.ndarray:
    """|Omega><Omega| with Omega = (|0>|psi_0> + |1>|psi_1>)/sqrt2."""
    omega = spec.u.reshape(4) / np.sqrt(2)  # coefficient of |xy> is u[x, y]/sqrt2
    return np.outer(omega, omega.conj())


def is_max_entangled(rho, tol: float = MEMBERSHIP_TOL) -> bool:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        return False
    if rank_eps(rho, tol) != 1:
        return False
    return (
        max_norm(partial_trace_over_2(rho, QUBITS) - HALF_I) <= tol
        and max_norm(partial_trace_over_1(rho, QUBITS) - HALF_I) <= tol
    )


@dataclass(frozen=True)
class QubitRank2Params:
    a: float
    x: complex
    y: complex
    z: complex
    t: complex


def rank2_matrix(p: QubitRank2Params) -> np.ndarray:
    a, x, y, z, t = p.a, p.x, p.y, p.z, p.t
    c = np.conj
    return np.array(
        [
            [a / 2, x, y, z],
            [c(x), (1 - a) / 2, t, -y],
            [c(y), c(t), (1 - a) / 2, -x],
            [c(z), -c(y), -c(x), a / 2],
        ],
        dtype=complex,
    )


def rank2_kernel(p: QubitRank2Params, tol: float = RANK_TOL) -> tuple[np.ndarray, bool]:
    """Build the (a, x, y, z, t) matrix and report whether it is a PSD rank-2 state.

    Both marginals of the matrix equal I/2 for every parameter value.
    """
    M = rank2_matrix(p)
    valid = is_psd(M, tol) and rank_eps(M, tol) == 2
    return M, valid


def params_of(rho) -> QubitRank2Params:
    """Read (a, x, y, z, t) off a member of C(I/2, I/2)."""
    rho = np.asarray(rho, dtype=complex)
    return QubitRank2Params(
        a=float(2 * rho[0, 0].real),
        x=complex(rho[0, 1]),
        y=complex(rho[0, 2]),
        z=complex(rho[0, 3]),
        t=complex(rho[1, 2]),
    )


def random_rank2_params(rng: np.random.Generator) -> QubitRank2Params:
    """Parameters of a PSD rank-2 kernel with a positive definite leading 2x2 block.

    With K = [[a/2, x], [x*, (1-a)/2]] and d = det K > 0, the coupling
    A = sqrt(d) e^{i theta} K^{-1/2} V K^{-1/2} (V a hermitian unitary of
    determinant -1) gives A^dagger K A = d K^{-1}, which is the lower-right
    block the kernel requires, and K A is traceless as its off-diagonal
    block requires.
    """
    a = rng.uniform(0.05, 0.95)
    r_max = np.sqrt(a * (1 - a)) / 2
    x = r_max * np.sqrt(rng.uniform(0, 0.9)) * np.exp(2j * np.pi * rng.random())
    K = np.array([[a / 2, x], [np.conj(x), (1 - a) / 2]])
    d = float(np.linalg.det(K).real)
    evals, vecs = np.linalg.eigh(K)
    K_inv_half = (vecs / np.sqrt(evals)) @ vecs.conj().T
    W = haar_unitary(rng)
    V = W @ np.diag([1.0, -1.0]) @ W.conj().T
    theta = 2 * np.pi * rng.random()
    A = np.sqrt(d) * np.exp(1j * theta) * K_inv_half @ V @ K_inv_half
    B = K @ A
    return QubitRank2Params(a=float(a), x=complex(x), y=complex(B[0, 0]), z=complex(B[0, 1]), t=complex(B[1, 0]))


def random_rank2_member(seed) -> np.ndarray:
    """lam |Omega1><Omega1| + (1 - lam) |Omega2><Omega2| for two Haar-random maximally entangled states."""
    rng = np.random.default_rng(seed)
    while True:
        lam = rng.uniform(0.1, 0.9)
        P1 = max_entangled(MaxEntangledSpec(haar_unitary(rng)))
        P2 = max_entangled(MaxEntangledSpec(haar_unitary(rng)))
        rho = lam * P1 + (1 - lam) * P2
        if rank_eps(rho) == 2:
            return rho


def case3_params(rng: np.random.Generator) -> QubitRank2Params:
    """Parameters with |x|^2 = |y|^2 = a(1-a)/4 and |z| < a/2 or |t| < (1-a)/2.

    a is drawn from the open interval (0, 1): at a = 1 the premises admit
    diag-supported rank-2 states such as diag(1/2, 0, 0, 1/2).
    """
    a = rng.uniform(0.0, 1.0)
    while a <= 0.0:
        a = rng.uniform(0.0, 1.0)
    r = np.sqrt(a * (1 - a)) / 2
    x = r * np.exp(2j * np.pi * rng.random())
    y = r * np.exp(2j * np.pi * rng.random())

    def inside(radius):
        return radius * np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())

    def anywhere():
        return complex(rng.standard_normal(), rng.standard_normal()) / 2

    if rng.random() < 0.5:
        z, t = inside(a / 2), anywhere()
    else:
        z, t = anywhere(), inside((1 - a) / 2)
    return QubitRank2Params(a=float(a), x=complex(x), y=complex(y), z=complex(z), t=complex(t))

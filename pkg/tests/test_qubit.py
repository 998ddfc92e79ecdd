import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coupled_extremal.certifier import Extremal, NotExtremal, check_extremal, validate_membership
from coupled_extremal.exceptions import SpecError
from coupled_extremal.numcore import partial_trace_over_1, partial_trace_over_2, rank_eps
from coupled_extremal.qubit import (
    QUBITS,
    MaxEntangledSpec,
    QubitRank2Params,
    case3_params,
    haar_unitary,
    half_identity_marginals,
    is_max_entangled,
    max_entangled,
    params_of,
    random_rank2_member,
    random_rank2_params,
    rank2_kernel,
    rank2_matrix,
)
from oracles import bell_phi_plus, ket_projector

HALF = half_identity_marginals()


class TestMaxEntangled:
    def test_identity_gives_phi_plus(self):
        np.testing.assert_allclose(max_entangled(MaxEntangledSpec(np.eye(2))), bell_phi_plus(), atol=1e-15)

    def test_swap_gives_psi_plus(self):
        rho = max_entangled(MaxEntangledSpec([[0, 1], [1, 0]]))
        np.testing.assert_allclose(rho, ket_projector(0, 1, 1, 0), atol=1e-15)

    def test_rejects_non_unitary(self):
        with pytest.raises(SpecError):
            MaxEntangledSpec([[1, 1], [0, 1]])

    def test_haar_outputs_are_members(self, rng):
        for _ in range(100):
            rho = max_entangled(MaxEntangledSpec(haar_unitary(rng)))
            assert validate_membership(rho, HALF, 1e-10) is None
            assert rank_eps(rho) == 1


class TestIsMaxEntangled:
    def test_examples(self):
        assert is_max_entangled(bell_phi_plus())
        assert not is_max_entangled(ket_projector(1, 0, 0, 0))
        assert not is_max_entangled((bell_phi_plus() + ket_projector(0, 1, 1, 0)) / 2)

    def test_rank_one_members_are_max_entangled(self, rng):
        # rank one with marginals I/2 forces the coefficient matrix to be unitary / sqrt2
        for _ in range(50):
            u = haar_unitary(rng)
            omega = u.reshape(4) / np.sqrt(2) * np.exp(1j * rng.uniform(0, 2 * np.pi))
            rho = np.outer(omega, omega.conj())
            assert is_max_entangled(rho)
            assert isinstance(check_extremal(rho, HALF), Extremal)
            coeff = omega.reshape(2, 2) * np.sqrt(2)
            np.testing.assert_allclose(coeff.conj().T @ coeff, np.eye(2), atol=1e-12)


class TestRank2Kernel:
    def test_diagonal_example(self):
        M, valid = rank2_kernel(QubitRank2Params(1.0, 0, 0, 0, 0))
        np.testing.assert_array_equal(M, np.diag([0.5, 0, 0, 0.5]))
        assert valid

    def test_half_quarter_example(self):
        M, valid = rank2_kernel(QubitRank2Params(0.5, 0.25, 0, 0, 0))
        # blocks [[1/4, 1/4], [1/4, 1/4]] on {0, 1} and {2, 3} (with -x) -> eigenvalues 0, 0, 1/2, 1/2
        np.testing.assert_allclose(np.linalg.eigvalsh(M), [0, 0, 0.5, 0.5], atol=1e-15)
        assert valid
        np.testing.assert_allclose(partial_trace_over_2(M, QUBITS), np.eye(2) / 2)

    @settings(max_examples=100, deadline=None)
    @given(
        a=st.floats(0, 1),
        parts=st.lists(st.floats(-2, 2), min_size=8, max_size=8),
    )
    def test_marginals_always_half_identity(self, a, parts):
        x, y, z, t = (complex(parts[2 * i], parts[2 * i + 1]) for i in range(4))
        M = rank2_matrix(QubitRank2Params(a, x, y, z, t))
        np.testing.assert_allclose(M, M.conj().T)
        np.testing.assert_allclose(partial_trace_over_2(M, QUBITS), np.eye(2) / 2, atol=1e-15)
        np.testing.assert_allclose(partial_trace_over_1(M, QUBITS), np.eye(2) / 2, atol=1e-15)

    def test_case3_has_no_rank2_completion(self, rng):
        for _ in range(200):
            p = case3_params(rng)
            assert 0 < p.a < 1
            assert abs(p.x) ** 2 == pytest.approx(p.a * (1 - p.a) / 4)
            assert abs(p.y) ** 2 == pytest.approx(p.a * (1 - p.a) / 4)
            assert abs(p.z) < p.a / 2 or abs(p.t) < (1 - p.a) / 2
            _, valid = rank2_kernel(p)
            assert not valid

    def test_case3_fails_at_the_endpoint(self):
        # a = 1 meets the case-3 premises and still gives a PSD rank-2 state
        _, valid = rank2_kernel(QubitRank2Params(1.0, 0, 0, 0.3, 0))
        assert valid

    def test_random_params_are_valid(self, rng):
        for _ in range(50):
            p = random_rank2_params(rng)
            M, valid = rank2_kernel(p)
            assert valid
            assert params_of(M) == p


class TestRandomRank2Member:
    @pytest.mark.parametrize("seed", range(10))
    def test_properties(self, seed):
        rho = random_rank2_member(seed)
        assert validate_membership(rho, HALF) is None
        assert rank_eps(rho) == 2
        v = check_extremal(rho, HALF)
        assert isinstance(v, NotExtremal)
        assert v.witness.check(rho, HALF) == []

    def test_deterministic(self):
        np.testing.assert_array_equal(random_rank2_member(5), random_rank2_member(5))

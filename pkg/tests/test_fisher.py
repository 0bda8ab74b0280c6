import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pfsic.constructions import minimal_pfsic, random_povm, two_basis_pfsic
from pfsic.fisher import (
    classical_fisher,
    classical_fisher_fd,
    fisher_report,
    fisher_symmetry_quantity,
    gill_massar,
    is_pfsic,
    matrix_rank,
    quantum_fisher_pure,
)
from pfsic.povm_core import povm_from_vectors

COMP2 = povm_from_vectors([[1, 0], [0, 1]])


def x_operators(d):
    """The Hermitian X_{k,sigma} generating first-order state changes."""
    ops = []
    for k in range(1, d):
        ket0k = np.zeros((d, d), dtype=complex)
        ket0k[0, k] = 1
        ops.append(ket0k + ket0k.T)
        ops.append(-1j * ket0k + 1j * ket0k.T)
    return ops


def fisher_by_trace(povm):
    """Brute-force C from dp/dx = tr(E X) with explicit operators."""
    E = povm.elements()
    p0 = E[:, 0, 0].real
    keep = p0 > 1e-12
    grads = np.array([[np.trace(e @ X).real for e in E] for X in x_operators(povm.dim)])
    g = grads[:, keep]
    return (g / p0[keep]) @ g.T


class TestQuantumFisher:
    @pytest.mark.parametrize("d", [2, 3, 5])
    def test_four_identity(self, d):
        np.testing.assert_array_equal(quantum_fisher_pure(d), 4 * np.eye(2 * d - 2))

    def test_sld_formula(self):
        # Q_ab = 1/2 tr(rho {L_a, L_b}) with L = 2X at rho = |0><0|
        d = 4
        rho = np.zeros((d, d))
        rho[0, 0] = 1
        L = [2 * X for X in x_operators(d)]
        Q = np.array([[0.5 * np.trace(rho @ (a @ b + b @ a)).real for b in L] for a in L])
        np.testing.assert_allclose(Q, quantum_fisher_pure(d), atol=1e-14)


class TestClassicalFisher:
    def test_computational_basis_zero(self):
        np.testing.assert_array_equal(classical_fisher(COMP2), np.zeros((2, 2)))

    @pytest.mark.parametrize("d", [2, 3, 4, 7])
    def test_minimal_pfsic(self, d):
        np.testing.assert_allclose(classical_fisher(minimal_pfsic(d)), 2 * np.eye(2 * d - 2), atol=1e-12)

    @pytest.mark.parametrize("d,p", [(2, 0.3), (3, 0.5), (4, 0.85)])
    def test_two_basis_diagonal(self, d, p):
        expected = np.diag(np.tile([4 * p, 4 * (1 - p)], d - 1))
        np.testing.assert_allclose(classical_fisher(two_basis_pfsic(d, p)), expected, atol=1e-12)

    @given(st.integers(2, 6), st.integers(0, 2**32 - 1), st.data())
    def test_matches_trace_oracle(self, d, seed, data):
        n = data.draw(st.integers(d, 3 * d))
        P = random_povm(d, n, seed)
        np.testing.assert_allclose(classical_fisher(P), fisher_by_trace(P), atol=1e-10)

    @given(st.integers(2, 5), st.integers(0, 2**32 - 1), st.data())
    def test_psd_and_rank_bound(self, d, seed, data):
        n = data.draw(st.integers(d, 3 * d))
        C = classical_fisher(random_povm(d, n, seed))
        np.testing.assert_array_equal(C, C.T)
        assert np.linalg.eigvalsh(C)[0] >= -1e-10
        assert matrix_rank(C) <= min(n, 2 * d - 2)


class TestFiniteDifference:
    def test_minimal_d3(self):
        P = minimal_pfsic(3)
        assert np.max(np.abs(classical_fisher_fd(P) - classical_fisher(P))) <= 1e-6

    def test_computational_basis(self):
        assert np.max(np.abs(classical_fisher_fd(COMP2))) <= 1e-8

    def test_random_d4_n8(self):
        P = random_povm(4, 8, seed=11)
        assert np.max(np.abs(classical_fisher_fd(P) - classical_fisher(P))) <= 1e-6

    def test_with_orthogonal_outcomes(self):
        P = random_povm(3, 7, seed=5, n_orthogonal=2)
        assert np.max(np.abs(classical_fisher_fd(P) - classical_fisher(P))) <= 1e-6

    @pytest.mark.parametrize("step", [1e-8, 1e-2])
    def test_step_range(self, step):
        with pytest.raises(ValueError):
            classical_fisher_fd(COMP2, step)


class TestGillMassar:
    @pytest.mark.parametrize("d", [2, 3, 6])
    def test_pfsic_equality(self, d):
        m = 2 * d - 2
        assert gill_massar(2 * np.eye(m), 4 * np.eye(m)) == pytest.approx(d - 1, abs=1e-12)

    def test_zero(self):
        assert gill_massar(np.zeros((2, 2)), 4 * np.eye(2)) == 0

    @pytest.mark.parametrize("p", [0.1, 0.3, 0.5, 0.8])
    def test_two_basis_family(self, p):
        d = 4
        C = classical_fisher(two_basis_pfsic(d, p))
        assert gill_massar(C, quantum_fisher_pure(d)) == pytest.approx(d - 1, abs=1e-9)

    def test_singular_q(self):
        with pytest.raises(np.linalg.LinAlgError, match="singular"):
            gill_massar(np.eye(2), np.diag([1.0, 0.0]))

    def test_general_q(self):
        Q = np.array([[2.0, 0.5], [0.5, 1.0]])
        C = np.array([[1.0, 0.2], [0.2, 0.3]])
        assert gill_massar(C, Q) == pytest.approx(np.trace(np.linalg.inv(Q) @ C))

    @given(st.integers(2, 5), st.integers(0, 2**32 - 1), st.integers(0, 2), st.data())
    def test_bound(self, d, seed, n_orth, data):
        n = data.draw(st.integers(max(d, n_orth + 1), 3 * d))
        P = random_povm(d, n, seed, n_orthogonal=n_orth)
        gm = gill_massar(classical_fisher(P), quantum_fisher_pure(d))
        assert gm <= d - 1 + 1e-9
        if n_orth == 0 and np.min(P.fiducial_overlaps()) > 1e-12:
            assert gm == pytest.approx(d - 1, abs=1e-9)
        elif n_orth:
            assert gm < d - 1 - 1e-9


class TestSymmetryQuantity:
    @pytest.mark.parametrize("d", [2, 3, 5])
    def test_pfsic_floor(self, d):
        m = 2 * d - 2
        val = fisher_symmetry_quantity(2 * np.eye(m), 4 * np.eye(m))
        assert val == pytest.approx((d - 1) / 2, abs=1e-12)

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_two_basis_03(self, d):
        C = classical_fisher(two_basis_pfsic(d, 0.3))
        val = fisher_symmetry_quantity(C, quantum_fisher_pure(d))
        assert val == pytest.approx(0.58 * (d - 1), abs=1e-12)
        assert val > (d - 1) / 2

    def test_zero(self):
        assert fisher_symmetry_quantity(np.zeros((2, 2)), 4 * np.eye(2)) == 0

    def test_general_q_matches_direct(self):
        Q = np.array([[2.0, 0.5], [0.5, 1.0]])
        C = np.array([[1.0, 0.2], [0.2, 0.3]])
        Qi = np.linalg.inv(Q)
        assert fisher_symmetry_quantity(C, Q) == pytest.approx(np.trace(Qi @ C @ Qi @ C))

    @given(st.integers(2, 5), st.integers(0, 2**32 - 1), st.data())
    def test_floor_inequality(self, d, seed, data):
        n = data.draw(st.integers(d, 3 * d))
        C = classical_fisher(random_povm(d, n, seed))
        Q = quantum_fisher_pure(d)
        assert fisher_symmetry_quantity(C, Q) >= gill_massar(C, Q) ** 2 / (2 * d - 2) - 1e-9


class TestIsPFSIC:
    @pytest.mark.parametrize("d", range(2, 9))
    def test_minimal(self, d):
        v = is_pfsic(minimal_pfsic(d))
        assert v and v.deviation <= 1e-12
        assert v.n_outcomes == v.min_outcomes == 2 * d - 1

    def test_two_basis_fair(self):
        assert is_pfsic(two_basis_pfsic(3, 0.5))

    def test_two_basis_unfair(self):
        v = is_pfsic(two_basis_pfsic(3, 0.3))
        assert not v
        assert v.deviation == pytest.approx(0.4, abs=1e-12)

    def test_computational_basis(self):
        v = is_pfsic(COMP2)
        assert not v and "C singular" in v.reason

    @given(st.integers(2, 6), st.integers(0, 2**32 - 1), st.data())
    def test_too_few_outcomes_never_pass(self, d, seed, data):
        n = data.draw(st.integers(d, 2 * d - 2)) if d > 2 else 2
        assert not is_pfsic(random_povm(d, n, seed))


def test_report_fields():
    r = fisher_report(minimal_pfsic(3), fd_check=True)
    assert r.gm == pytest.approx(2.0, abs=1e-12)
    assert r.symmetry == pytest.approx(1.0, abs=1e-12)
    assert r.pfsic and r.rank == 4 and r.excluded == ()
    assert r.fd_deviation <= 1e-6
    out = r.to_dict()
    assert out["gm_bound"] == 2 and out["symmetry_floor"] == 1
    assert np.shape(out["C"]) == (4, 4)


def test_report_lists_excluded():
    r = fisher_report(COMP2)
    assert r.excluded == (1,)
    assert r.gm == 0
    assert not r.pfsic

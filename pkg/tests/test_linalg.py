import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from enaqt import linalg
from enaqt.errors import NotPositiveSemidefiniteError, SingularSystemError, ValidationError

from conftest import random_hermitian

seeds = st.integers(min_value=0, max_value=2**32 - 1)


class TestEigh:
    def test_diagonal(self):
        dec = linalg.eigh(np.diag([2.0, 5.0]))
        np.testing.assert_allclose(dec.eigenvalues, [2, 5])
        np.testing.assert_allclose(np.abs(dec.eigenvectors), np.eye(2), atol=1e-15)

    def test_pauli_x(self):
        dec = linalg.eigh([[0, 1], [1, 0]])
        np.testing.assert_allclose(dec.eigenvalues, [-1, 1], atol=1e-15)
        v = dec.eigenvectors
        # eigenvectors (1, -1)/sqrt2 and (1, 1)/sqrt2 up to phase
        assert abs(abs(np.vdot(v[:, 0], [1, -1])) / np.sqrt(2) - 1) < 1e-12
        assert abs(abs(np.vdot(v[:, 1], [1, 1])) / np.sqrt(2) - 1) < 1e-12

    @settings(max_examples=50, deadline=None)
    @given(seed=seeds, n=st.integers(1, 25))
    def test_reconstruction_and_unitarity(self, seed, n):
        a = random_hermitian(np.random.default_rng(seed), n)
        dec = linalg.eigh(a)
        v = dec.eigenvectors
        assert np.all(np.diff(dec.eigenvalues) >= 0)
        assert linalg.max_abs(v.conj().T @ v - np.eye(n)) < 1e-10
        assert linalg.max_abs(dec.reconstruct() - a) < 1e-9 * max(1, linalg.max_abs(a))
        for lam, col in zip(dec.eigenvalues, v.T):
            assert np.linalg.norm(a @ col - lam * col) < 1e-9 * max(1, np.linalg.norm(a, 2))

    def test_rejects_non_square(self):
        with pytest.raises(ValidationError, match="square"):
            linalg.eigh(np.zeros((2, 3)))

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValidationError, match="Hermitian"):
            linalg.eigh([[0, 1], [0, 0]])

    def test_rejects_nan(self):
        with pytest.raises(ValidationError, match="NaN"):
            linalg.eigh([[np.nan, 0], [0, 1]])


class TestSqrtm:
    def test_diag(self):
        np.testing.assert_allclose(linalg.sqrtm_psd(np.diag([4.0, 9.0])), np.diag([2, 3]), atol=1e-14)

    def test_identity(self):
        np.testing.assert_allclose(linalg.sqrtm_psd(np.eye(3)), np.eye(3), atol=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(seed=seeds)
    def test_square_recovers_input(self, seed):
        rng = np.random.default_rng(seed)
        b = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        a = b.conj().T @ b
        r = linalg.sqrtm_psd(a)
        scale = max(1, linalg.max_abs(a))
        assert linalg.max_abs(r - r.conj().T) == 0
        assert np.linalg.eigvalsh(r)[0] >= -1e-12 * scale
        assert linalg.max_abs(r @ r - a) < 1e-8 * scale
        assert linalg.max_abs(r @ a - a @ r) < 1e-8 * scale

    def test_tiny_negative_is_clamped(self):
        r = linalg.sqrtm_psd(np.diag([1.0, -5e-11]))
        np.testing.assert_allclose(r, np.diag([1, 0]), atol=1e-15)

    def test_negative_raises_with_eigenvalue(self):
        with pytest.raises(NotPositiveSemidefiniteError, match="not positive semidefinite") as info:
            linalg.sqrtm_psd(np.diag([1.0, -1e-3]))
        assert info.value.eigenvalue == pytest.approx(-1e-3)


class TestExpm:
    def test_zero(self):
        np.testing.assert_array_equal(linalg.expm(np.zeros((3, 3))), np.eye(3))

    def test_diag(self):
        np.testing.assert_allclose(linalg.expm(np.diag([0.3, -2.0])), np.diag(np.exp([0.3, -2.0])), rtol=1e-14)

    @pytest.mark.parametrize("theta", [0.1, 1.0, np.pi, 40.0])
    def test_rotation_generator(self, theta):
        c, s = np.cos(theta), np.sin(theta)
        np.testing.assert_allclose(linalg.expm([[0, theta], [-theta, 0]]), [[c, s], [-s, c]], atol=1e-12)

    def test_accuracy_against_eigendecomposition(self, rng):
        # normal matrix with ||a||_1 ~ 100: exp via its (unitary) eigenbasis is exact
        q, _ = np.linalg.qr(rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6)))
        lam = rng.uniform(-15, 0, 6) + 1j * rng.uniform(-15, 15, 6)
        a = (q * lam) @ q.conj().T
        ref = (q * np.exp(lam)) @ q.conj().T
        assert np.linalg.norm(linalg.expm(a) - ref) <= 1e-10 * np.linalg.norm(ref)

    @settings(max_examples=30, deadline=None)
    @given(seed=seeds)
    def test_commuting_sum(self, seed):
        rng = np.random.default_rng(seed)
        a = np.diag(rng.uniform(-3, 1, 4) + 1j * rng.uniform(-3, 3, 4))
        b = np.diag(rng.uniform(-3, 1, 4) + 1j * rng.uniform(-3, 3, 4))
        lhs = linalg.expm(a + b)
        assert linalg.max_abs(lhs - linalg.expm(a) @ linalg.expm(b)) < 1e-9

    def test_rejects_non_square(self):
        with pytest.raises(ValidationError):
            linalg.expm(np.zeros((2, 3)))


class TestKron:
    def test_identities(self):
        np.testing.assert_array_equal(linalg.kron(np.eye(2), np.eye(2)), np.eye(4))

    def test_sigma_z(self):
        np.testing.assert_array_equal(linalg.kron(np.diag([1, -1]), np.eye(2)), np.diag([1, 1, -1, -1]))

    def test_shape(self):
        assert linalg.kron(np.ones((2, 3)), np.ones((4, 5))).shape == (8, 15)

    @settings(max_examples=30, deadline=None)
    @given(seed=seeds)
    def test_mixed_product(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c, d = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(4))
        lhs = linalg.kron(a, b) @ linalg.kron(c, d)
        assert linalg.max_abs(lhs - linalg.kron(a @ c, b @ d)) < 1e-12


class TestSolve:
    def test_identity(self):
        y = np.array([1.0, 2.0, 3.0])
        np.testing.assert_allclose(linalg.solve(np.eye(3), y), y)

    def test_diag(self):
        np.testing.assert_allclose(linalg.solve(np.diag([2.0, 4.0]), [2.0, 4.0]), [1, 1])

    @settings(max_examples=30, deadline=None)
    @given(seed=seeds)
    def test_residual(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9)) + 6 * np.eye(9)
        y = rng.normal(size=9) + 1j * rng.normal(size=9)
        x = linalg.solve(a, y)
        assert np.linalg.norm(a @ x - y) < 1e-9 * np.linalg.norm(y)

    def test_singular(self):
        with pytest.raises(SingularSystemError, match="singular system"):
            linalg.solve([[1.0, 2.0], [2.0, 4.0]], [1.0, 1.0])

    def test_zero_matrix(self):
        with pytest.raises(SingularSystemError):
            linalg.solve(np.zeros((2, 2)), [1.0, 1.0])

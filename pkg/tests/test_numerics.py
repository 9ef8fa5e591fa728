import numpy as np
import pytest

from ariscomm.numerics import (
    RngStream,
    SingularMatrixError,
    cmat_mul,
    hermitian_solve,
    sample_complex_gaussian,
)


def naive_matmul(a, b):
    out = np.zeros((a.shape[0], b.shape[1]), dtype=complex)
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            for k in range(a.shape[1]):
                out[i, j] += a[i, k] * b[k, j]
    return out


class TestCmatMul:
    def test_identity(self):
        a = np.array([[1 + 2j, 3], [0, 4 - 1j]])
        assert np.allclose(cmat_mul(np.eye(2), a), a)

    def test_imaginary_square(self):
        assert np.allclose(cmat_mul(np.array([[1j]]), np.array([[1j]])),
                           np.array([[-1.0]]))

    def test_matches_naive_oracle(self):
        rng = RngStream(11)
        a = sample_complex_gaussian(rng, 3, 4)
        b = sample_complex_gaussian(rng, 4, 2)
        assert np.allclose(cmat_mul(a, b), naive_matmul(a, b), atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            cmat_mul(np.ones((2, 3)), np.ones((2, 3)))

    def test_associativity(self):
        rng = RngStream(12)
        for _ in range(20):
            a = sample_complex_gaussian(rng, 3, 5)
            b = sample_complex_gaussian(rng, 5, 4)
            c = sample_complex_gaussian(rng, 4, 2)
            left = cmat_mul(cmat_mul(a, b), c)
            right = cmat_mul(a, cmat_mul(b, c))
            scale = np.abs(left).max()
            assert np.abs(left - right).max() < 1e-12 * max(scale, 1.0)


def random_hpd(rng, n, spread=1.0):
    a = sample_complex_gaussian(rng, n, n)
    return a @ a.conj().T + spread * np.eye(n)


class TestHermitianSolve:
    def test_identity(self):
        b = np.array([[1.0, 2.0], [3.0 + 1j, 4.0]])
        assert np.allclose(hermitian_solve(np.eye(2), b), b)

    def test_scalar_matrix(self):
        x = hermitian_solve(2.0 * np.eye(2), np.eye(2))
        assert np.allclose(x, 0.5 * np.eye(2))

    def test_residual(self):
        rng = RngStream(13)
        a = random_hpd(rng, 4)
        b = sample_complex_gaussian(rng, 4, 3)
        x = hermitian_solve(a, b)
        assert np.linalg.norm(a @ x - b) < 1e-10 * np.linalg.norm(b)

    def test_recovers_solution(self):
        # a @ x = b with known x, condition number well under 1e6
        rng = RngStream(14)
        for _ in range(25):
            a = random_hpd(rng, 5, spread=0.5)
            assert np.linalg.cond(a) < 1e6
            x_true = sample_complex_gaussian(rng, 5, 2)
            x = hermitian_solve(a, a @ x_true)
            assert np.linalg.norm(x - x_true) < 1e-9 * np.linalg.norm(x_true)

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            hermitian_solve(np.ones((2, 3)), np.ones(2))

    def test_indefinite_rejected(self):
        with pytest.raises(SingularMatrixError):
            hermitian_solve(np.diag([1.0, -1.0]), np.ones(2))


class TestComplexGaussian:
    def test_moments(self):
        rng = RngStream(15)
        z = sample_complex_gaussian(rng, 1000, 1000)
        assert abs(z.mean()) < 0.01
        var = np.mean(np.abs(z) ** 2)
        assert 0.99 < var < 1.01

    def test_seed_determinism(self):
        a = sample_complex_gaussian(RngStream(7), 4, 4)
        b = sample_complex_gaussian(RngStream(7), 4, 4)
        assert np.array_equal(a, b)

    def test_bad_shape(self):
        with pytest.raises(ValueError):
            sample_complex_gaussian(RngStream(0), 0, 3)


class TestRngStream:
    def test_children_are_independent_and_stable(self):
        root = RngStream(99)
        c1 = root.child(1)
        c2 = root.child(2)
        again = RngStream(99).child(1)
        assert np.array_equal(c1.gen.random(5), again.gen.random(5))
        assert not np.array_equal(RngStream(99).child(1).gen.random(5),
                                  c2.gen.random(5))

    def test_child_does_not_advance_parent(self):
        root = RngStream(5)
        before = RngStream(5).gen.random(3)
        root.child(0)
        assert np.array_equal(root.gen.random(3), before)

    def test_state_round_trip(self):
        s = RngStream(3)
        s.gen.random(10)
        saved = s.state()
        x = s.gen.random(4)
        s.set_state(saved)
        assert np.array_equal(s.gen.random(4), x)

import numpy as np
import pytest
from scipy import stats

from nnqst.errors import OutOfRange
from nnqst.qcore import fidelity, kron, purity
from nnqst.rng import seeded_rng
from nnqst.states import (
    bell_singlet,
    ginibre,
    haar_unitary,
    maximally_mixed,
    sample_bures,
    werner_state,
)

from conftest import H, V, assert_physical
from oracles import bures_qubit_larger_eigenvalue


class TestGinibre:
    def test_reproducible(self):
        a = ginibre(1, seeded_rng(5))
        b = ginibre(1, seeded_rng(5))
        assert a.shape == (1, 1)
        np.testing.assert_array_equal(a, b)

    def test_moments(self):
        rng = seeded_rng(6)
        g = np.stack([ginibre(2, rng) for _ in range(100_000)])
        for part in (g.real, g.imag):
            assert np.all(np.abs(part.mean(axis=0)) < 0.02)
            assert np.all(np.abs(part.var(axis=0) - 1.0) < 0.05)

    def test_full_rank(self, rng):
        g = ginibre(4, rng)
        assert np.linalg.eigvalsh(g.conj().T @ g)[0] > 0


class TestHaar:
    @pytest.mark.parametrize("d", [1, 2, 3, 8])
    def test_unitary(self, rng, d):
        u = haar_unitary(d, rng)
        assert np.max(np.abs(u.conj().T @ u - np.eye(d))) <= 1e-10

    def test_eigenphases_uniform(self):
        rng = seeded_rng(7)
        phases = np.concatenate([np.angle(np.linalg.eigvals(haar_unitary(2, rng))) for _ in range(100_000)])
        ks = stats.kstest(phases, stats.uniform(loc=-np.pi, scale=2 * np.pi).cdf).statistic
        assert ks < 0.01

    def test_circle_case(self):
        rng = seeded_rng(8)
        z = np.array([haar_unitary(1, rng)[0, 0] for _ in range(20_000)])
        np.testing.assert_allclose(np.abs(z), 1.0, atol=1e-12)
        ks = stats.kstest(np.angle(z), stats.uniform(loc=-np.pi, scale=2 * np.pi).cdf).statistic
        assert ks < 0.02

    def test_left_invariance(self):
        # the first-column modulus |U_00|^2 is Beta(1, d-1) for Haar U; so is that of W U
        rng = seeded_rng(9)
        w = haar_unitary(3, seeded_rng(10))
        a = np.array([abs(haar_unitary(3, rng)[0, 0]) ** 2 for _ in range(20_000)])
        b = np.array([abs((w @ haar_unitary(3, rng))[0, 0]) ** 2 for _ in range(20_000)])
        beta = stats.beta(1, 2).cdf
        assert stats.kstest(a, beta).statistic < 0.02
        assert stats.kstest(b, beta).statistic < 0.02


class TestBures:
    def test_zero_qubits(self, rng):
        np.testing.assert_array_equal(sample_bures(0, rng), [[1.0]])

    def test_physical(self, rng):
        for _ in range(500):
            assert_physical(sample_bures(2, rng))

    def test_seed_deterministic(self):
        a = sample_bures(2, seeded_rng(3, 4))
        b = sample_bures(2, seeded_rng(3, 4))
        c = sample_bures(2, seeded_rng(3, 5))
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_qubit_eigenvalue_law(self):
        rng = seeded_rng(12)
        samples = np.array([np.linalg.eigvalsh(sample_bures(1, rng))[1] for _ in range(100_000)])
        oracle = bures_qubit_larger_eigenvalue(100_000, seeded_rng(13))
        assert stats.ks_2samp(samples, oracle).statistic < 0.02


class TestWerner:
    def test_q0(self):
        np.testing.assert_allclose(werner_state(0), np.eye(4) / 4)

    def test_q1(self):
        rho = werner_state(1)
        psi = np.array([0, 1, -1, 0]) / np.sqrt(2)
        np.testing.assert_allclose(rho, np.outer(psi, psi))

    def test_half(self):
        np.testing.assert_allclose(np.linalg.eigvalsh(werner_state(0.5)), [0.125, 0.125, 0.125, 0.625], atol=1e-12)

    def test_matches_kron_construction(self):
        hv = kron([[1], [0]], [[0], [1]]).ravel()
        vh = kron([[0], [1]], [[1], [0]]).ravel()
        psi = (hv - vh) / np.sqrt(2)
        bell = np.outer(psi, psi.conj())
        np.testing.assert_allclose(bell_singlet(), psi)
        for q in np.linspace(0, 1, 11):
            ref = q * bell + (1 - q) / 4 * kron(np.eye(2), np.eye(2))
            assert fidelity(werner_state(q), ref) == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("q", [-0.1, 1.01])
    def test_out_of_range(self, q):
        with pytest.raises(OutOfRange):
            werner_state(q)


class TestMaximallyMixed:
    def test_values(self):
        np.testing.assert_allclose(maximally_mixed(1), np.diag([0.5, 0.5]))
        np.testing.assert_allclose(maximally_mixed(2), np.eye(4) / 4)

    @pytest.mark.parametrize("n", range(0, 6))
    def test_purity(self, n):
        assert purity(maximally_mixed(n)) == pytest.approx(2.0**-n)

import numpy as np
import pytest

from nnqst.errors import DimensionMismatch, ValidationError
from nnqst.measurement import ideal_features, pauli_set, simulate_counts
from nnqst.mle import MleConfig, log_likelihood, mle_estimate
from nnqst.qcore import infidelity
from nnqst.rng import seeded_rng
from nnqst.states import maximally_mixed, sample_bures, werner_state

from conftest import H, assert_physical

# near-pure states converge sublinearly; the defaults stop far too early for 1e-6
EXACT = MleConfig(dilution=1.0, tolerance=1e-13, max_iterations=2_000_000)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_maximally_mixed_fixed_point(n):
    ms = pauli_set(n)
    res = mle_estimate(ideal_features(maximally_mixed(n), ms), ms)
    assert res.converged and res.iterations == 1
    np.testing.assert_allclose(res.rho, maximally_mixed(n), atol=1e-14)


def test_recovers_random_qubit_states():
    rng = seeded_rng(31)
    ms = pauli_set(1)
    for _ in range(20):
        rho = sample_bures(1, rng)
        res = mle_estimate(ideal_features(rho, ms), ms, EXACT)
        assert res.converged
        assert infidelity(res.rho, rho) < 1e-6


def test_recovers_pure_boundary():
    ms = pauli_set(1)
    res = mle_estimate(ideal_features(H, ms), ms)
    assert infidelity(res.rho, H) < 1e-6


def test_two_qubit_exact():
    rng = seeded_rng(32)
    ms = pauli_set(2)
    for rho in (sample_bures(2, rng), werner_state(1.0), werner_state(0.4)):
        res = mle_estimate(ideal_features(rho, ms), ms, EXACT)
        assert infidelity(res.rho, rho) < 1e-6


def test_iterates_physical_and_likelihood_monotone():
    rng = seeded_rng(33)
    for n in (1, 2):
        ms = pauli_set(n)
        for _ in range(5):
            freqs = simulate_counts(sample_bures(n, rng), ms, 200, rng)
            trace = []

            def record(it, rho):
                assert_physical(rho)
                trace.append(log_likelihood(freqs, rho, ms))

            mle_estimate(freqs, ms, MleConfig(max_iterations=300), callback=record)
            assert np.all(np.diff(trace) >= -1e-12)


def test_default_config_values():
    cfg = MleConfig()
    assert (cfg.max_iterations, cfg.tolerance, cfg.dilution) == (5000, 1e-10, 0.1)


def test_dense_and_factorised_paths_agree(rng):
    from nnqst.mle import _r_function, _r_operator

    ms = pauli_set(2)
    freqs = simulate_counts(sample_bures(2, rng), ms, 50, rng)
    rho = sample_bures(2, rng)
    dense = _r_function(freqs, ms)(rho)
    np.testing.assert_allclose(dense, _r_operator(freqs, ms.probabilities(rho).real, ms), atol=1e-12)


def test_not_converged_is_a_flag():
    ms = pauli_set(2)
    freqs = simulate_counts(werner_state(0.9), ms, 100, seeded_rng(34))
    res = mle_estimate(freqs, ms, MleConfig(max_iterations=3))
    assert not res.converged and res.iterations == 3
    assert_physical(res.rho)


def test_zero_frequency_with_vanishing_probability():
    # |H> data: the V outcome has f = 0 and p -> 0 along the iteration
    ms = pauli_set(1)
    freqs = np.array([1.0, 0.0, 0.5, 0.5, 0.5, 0.5])
    res = mle_estimate(freqs, ms)
    assert np.all(np.isfinite(res.rho))


def test_validation():
    with pytest.raises(ValidationError):
        MleConfig(dilution=0.0)
    with pytest.raises(ValidationError):
        MleConfig(tolerance=0)
    with pytest.raises(DimensionMismatch):
        mle_estimate(np.full(36, 0.25), pauli_set(1))


def test_four_qubit_factorised_path():
    rng = seeded_rng(35)
    ms = pauli_set(4)
    rho = sample_bures(4, rng)
    res = mle_estimate(simulate_counts(rho, ms, 5000, rng), ms, MleConfig(max_iterations=200))
    assert_physical(res.rho)
    assert infidelity(res.rho, rho) < 0.1

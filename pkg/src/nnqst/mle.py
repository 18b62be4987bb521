"""Maximum-likelihood reconstruction by the diluted R-rho-R iteration.

Starting from the maximally mixed state, each step applies

    X = (1 - eps) I/d + eps R(rho),    R(rho) = sum_k f_k / Tr(M_k rho) M_k
    rho <- X rho X / Tr(X rho X)

which keeps every iterate Hermitian, positive and unit-trace.  Small
``eps`` trades speed for a likelihood that increases at every step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch, ValidationError
from .measurement import MATERIALIZE_MAX_QUBITS, MeasurementSet
from .qcore import dagger

_PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class MleConfig:
    max_iterations: int = 5000
    tolerance: float = 1e-10
    dilution: float = 0.1

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValidationError("tolerance must be positive")
        if not 0 < self.dilution <= 1:
            raise ValidationError("dilution must lie in (0, 1]")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be >= 1")


class MleResult(NamedTuple):
    rho: np.ndarray
    iterations: int
    converged: bool


def _r_operator(freqs: np.ndarray, probs: np.ndarray, ms: MeasurementSet) -> np.ndarray:
    weights = np.zeros_like(freqs)
    active = freqs > 0
    # vanishing model probability with nonzero data: clamp instead of dividing by 0
    weights[active] = freqs[active] / np.maximum(probs[active], _PROB_FLOOR)
    return ms.weighted_sum(weights)


def log_likelihood(freqs, rho, ms: MeasurementSet) -> float:
    """``sum_k f_k log Tr(M_k rho)`` over outcomes with nonzero frequency."""
    freqs = np.asarray(freqs, dtype=np.float64)
    probs = ms.probabilities(rho).real
    active = freqs > 0
    return float(np.sum(freqs[active] * np.log(np.maximum(probs[active], _PROB_FLOOR))))


def _apply(rho: np.ndarray, r: np.ndarray, dilution: float) -> np.ndarray:
    d = rho.shape[0]
    x = dilution * r
    x.flat[:: d + 1] += (1.0 - dilution) / d
    x = 0.5 * (x + x.conj().T)
    new = x @ rho @ x
    new = 0.5 * (new + new.conj().T)
    return new / new.trace().real


def mle_step(rho: np.ndarray, freqs: np.ndarray, ms: MeasurementSet, dilution: float) -> np.ndarray:
    """One diluted update of ``rho`` for the frequency vector ``freqs``."""
    probs = ms.probabilities(rho).real
    return _apply(rho, _r_operator(freqs, probs, ms), dilution)


class _DenseR:
    """``R(rho)`` from flattened projectors of the outcomes with f > 0.

    For n <= 3 a long run on a 2x2 or 4x4 state is dominated by call
    overhead, so the active projector rows are gathered once.
    """

    def __init__(self, freqs: np.ndarray, ms: MeasurementSet):
        active = freqs > 0
        stack = ms.projectors[active]
        self._f = freqs[active]
        self._d = ms.dim
        self._flat = stack.reshape(len(stack), -1)
        # Tr(M rho) = sum_ij M_ji rho_ij
        self._flat_t = np.ascontiguousarray(stack.transpose(0, 2, 1).reshape(len(stack), -1))

    def __call__(self, rho):
        probs = (self._flat_t @ rho.ravel()).real
        weights = self._f / np.maximum(probs, _PROB_FLOOR)
        return (weights @ self._flat).reshape(self._d, self._d)


def _r_function(freqs: np.ndarray, ms: MeasurementSet):
    if ms.n_qubits <= MATERIALIZE_MAX_QUBITS:
        return _DenseR(freqs, ms)
    return lambda rho: _r_operator(freqs, ms.probabilities(rho).real, ms)


def _half_trace_norm(diff: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + dagger(diff))))))


def mle_estimate(freqs, ms: MeasurementSet, config: MleConfig = MleConfig(), callback=None) -> MleResult:
    """Run the iteration until successive iterates are within ``config.tolerance``.

    ``converged`` is False if ``max_iterations`` ran out first; the last
    iterate is returned either way.  ``callback(iteration, rho)`` is
    invoked after every step when given.
    """
    freqs = np.asarray(freqs, dtype=np.float64)
    if freqs.shape != (ms.n_features,):
        raise DimensionMismatch(
            f"expected {ms.n_features} frequencies for {ms.n_qubits} qubits, got {freqs.shape}"
        )
    d = ms.dim
    r_of = _r_function(freqs, ms)
    # ||A||_1 >= ||A||_F, so a large Frobenius step rules out convergence cheaply
    frob_cut = 2.0 * config.tolerance
    rho = np.eye(d, dtype=np.complex128) / d
    for it in range(1, config.max_iterations + 1):
        new = _apply(rho, r_of(rho), config.dilution)
        if callback is not None:
            callback(it, new)
        diff = new - rho
        rho = new
        if np.linalg.norm(diff) <= frob_cut and _half_trace_norm(diff) < config.tolerance:
            return MleResult(rho, it, True)
    return MleResult(rho, config.max_iterations, False)

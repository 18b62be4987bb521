"""Pauli projective measurements, ideal features and shot-noise simulation.

Feature ordering
----------------
A feature index ``k`` in ``range(6**n)`` written in base 6 gives one digit
per qubit, qubit 0 most significant.  Digit values 0..5 label the
single-qubit projectors H, V, D, A, R, L.  Digit ``// 2`` is the basis
(0 = H/V, 1 = D/A, 2 = R/L) and digit ``% 2`` the outcome inside it.

A measurement *setting* fixes one basis per qubit; its ``2**n`` outcomes
are the projectors sharing those basis digits.  Settings are numbered in
base 3 (qubit 0 most significant) and outcomes in base 2, which is what
:func:`to_settings` and :func:`from_settings` convert between.

Trace evaluations never build the ``6**n`` dense projectors: the density
matrix is contracted one qubit at a time with the 6 single-qubit
projectors.  Projectors are only materialised on request for small n.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidProbabilities, TooLarge, ValidationError
from .qcore import kron, n_qubits_of

ORDER_TAG = "base6-HVDARL"
LABELS = ("H", "V", "D", "A", "R", "L")
MAX_QUBITS = 12
MATERIALIZE_MAX_QUBITS = 3

_S = 1.0 / np.sqrt(2.0)
KETS = np.array(
    [
        [1.0, 0.0],
        [0.0, 1.0],
        [_S, _S],
        [_S, -_S],
        [_S, 1j * _S],
        [_S, -1j * _S],
    ],
    dtype=np.complex128,
)
#: single-qubit projectors |k><k|, shape (6, 2, 2)
SINGLE_QUBIT_PROJECTORS = np.einsum("ki,kj->kij", KETS, KETS.conj())


@dataclass(frozen=True)
class MeasurementSet:
    """The 6^n Pauli projectors grouped into 3^n settings of 2^n outcomes."""

    n_qubits: int
    settings: np.ndarray = field(repr=False)  # (3**n, 2**n) feature indices

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    @property
    def n_features(self) -> int:
        return 6**self.n_qubits

    @property
    def n_settings(self) -> int:
        return 3**self.n_qubits

    def labels(self, k: int) -> str:
        return "".join(LABELS[digit] for digit in decode_index(k, self.n_qubits))

    def projector(self, k: int) -> np.ndarray:
        return kron(*(SINGLE_QUBIT_PROJECTORS[digit] for digit in decode_index(k, self.n_qubits)))

    @property
    def projectors(self) -> np.ndarray:
        """Dense ``(6**n, d, d)`` stack; only available for n <= 3."""
        if self.n_qubits > MATERIALIZE_MAX_QUBITS:
            raise TooLarge(
                f"dense projectors are only materialised for n <= {MATERIALIZE_MAX_QUBITS}"
            )
        return _dense_projectors(self.n_qubits)

    def probabilities(self, rho: np.ndarray) -> np.ndarray:
        """``Tr(M_k rho)`` for every projector, complex-valued."""
        return _contract(rho, self.n_qubits)

    def weighted_sum(self, weights: np.ndarray) -> np.ndarray:
        """``sum_k w_k M_k`` without materialising the projectors."""
        return _expand(np.asarray(weights), self.n_qubits)


_DENSE_CACHE: dict[int, np.ndarray] = {}


def _dense_projectors(n: int) -> np.ndarray:
    if n not in _DENSE_CACHE:
        ms = pauli_set(n)
        stack = np.stack([ms.projector(k) for k in range(ms.n_features)])
        stack.setflags(write=False)
        _DENSE_CACHE[n] = stack
    return _DENSE_CACHE[n]


def decode_index(k: int, n_qubits: int) -> tuple[int, ...]:
    """Base-6 digits of ``k``, qubit 0 first."""
    if not 0 <= k < 6**n_qubits:
        raise ValidationError(f"feature index {k} out of range for {n_qubits} qubits")
    digits = []
    for _ in range(n_qubits):
        k, r = divmod(k, 6)
        digits.append(r)
    return tuple(reversed(digits))


def encode_index(digits) -> int:
    k = 0
    for digit in digits:
        k = 6 * k + int(digit)
    return k


def to_settings(values: np.ndarray, n_qubits: int) -> np.ndarray:
    """Reshape trailing length-6^n axis into ``(3**n, 2**n)`` settings x outcomes."""
    values = np.asarray(values)
    lead = values.shape[:-1]
    x = values.reshape(lead + (3, 2) * n_qubits)
    nl = len(lead)
    basis_axes = [nl + 2 * q for q in range(n_qubits)]
    outcome_axes = [nl + 2 * q + 1 for q in range(n_qubits)]
    x = x.transpose(list(range(nl)) + basis_axes + outcome_axes)
    return x.reshape(lead + (3**n_qubits, 2**n_qubits))


def from_settings(values: np.ndarray, n_qubits: int) -> np.ndarray:
    """Inverse of :func:`to_settings`."""
    values = np.asarray(values)
    lead = values.shape[:-2]
    nl = len(lead)
    x = values.reshape(lead + (3,) * n_qubits + (2,) * n_qubits)
    order = list(range(nl))
    for q in range(n_qubits):
        order += [nl + q, nl + n_qubits + q]
    return x.transpose(order).reshape(lead + (6**n_qubits,))


def pauli_set(n_qubits: int) -> MeasurementSet:
    if n_qubits < 1:
        raise ValidationError("Pauli sets need at least one qubit")
    if n_qubits > MAX_QUBITS:
        raise TooLarge(f"{n_qubits} qubits exceeds the {MAX_QUBITS}-qubit memory guard")
    idx = np.arange(6**n_qubits)
    return MeasurementSet(n_qubits, to_settings(idx, n_qubits))


def _contract(rho: np.ndarray, n: int) -> np.ndarray:
    # Tr((P_k0 x ... x P_kn-1) rho) = sum_ij prod_q P[k_q, j_q, i_q] rho[i, j]
    x = np.asarray(rho, dtype=np.complex128).reshape((2,) * (2 * n))
    for q in range(n):
        # remaining row/col axes shrink by one each step; the new k-axis is appended
        rows_left = n - q
        x = np.tensordot(x, SINGLE_QUBIT_PROJECTORS, axes=([0, rows_left], [2, 1]))
    return x.reshape(6**n)


def _expand(weights: np.ndarray, n: int) -> np.ndarray:
    x = weights.astype(np.complex128).reshape((6,) * n)
    for _ in range(n):
        # consume leading k-axis, append (row, col) pair
        x = np.tensordot(x, SINGLE_QUBIT_PROJECTORS, axes=([0], [0]))
    # axes are now (r0, c0, r1, c1, ...)
    x = x.transpose([2 * q for q in range(n)] + [2 * q + 1 for q in range(n)])
    d = 2**n
    return x.reshape(d, d)


def ideal_features(rho: np.ndarray, ms: MeasurementSet) -> np.ndarray:
    """Noise-free outcome probabilities ``Tr(M_k rho)``."""
    rho = np.asarray(rho, dtype=np.complex128)
    if n_qubits_of(rho) != ms.n_qubits:
        raise DimensionMismatch(
            f"state has {n_qubits_of(rho)} qubits, measurement set {ms.n_qubits}"
        )
    p = ms.probabilities(rho)
    if np.max(np.abs(p.imag)) > 1e-10:
        raise InvalidProbabilities("outcome probabilities have imaginary parts; rho not Hermitian")
    return np.ascontiguousarray(p.real)


def _validated_setting_probs(values: np.ndarray, n_qubits: int) -> np.ndarray:
    p = to_settings(values, n_qubits)
    if np.min(p) < -1e-10:
        raise InvalidProbabilities(f"negative outcome probability {np.min(p):.3g}")
    sums = p.sum(axis=-1)
    if np.max(np.abs(sums - 1.0)) > 1e-8:
        raise InvalidProbabilities("setting probabilities do not sum to one")
    p = np.clip(p, 0.0, None)
    return p / p.sum(axis=-1, keepdims=True)


def simulate_counts(
    rho: np.ndarray, ms: MeasurementSet, n0: int, rng: np.random.Generator
) -> np.ndarray:
    """Frequencies from ``n0`` shots per setting, multinomial in each setting."""
    if n0 < 1:
        raise ValidationError("n0 must be a positive integer")
    p = _validated_setting_probs(ideal_features(rho, ms), ms.n_qubits)
    counts = rng.multinomial(n0, p)
    return from_settings(counts / n0, ms.n_qubits)


def check_features(values, n_qubits: int, tol: float = 1e-8) -> np.ndarray:
    """Validate a feature vector's length, range and per-setting sums."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (6**n_qubits,):
        raise DimensionMismatch(
            f"expected {6 ** n_qubits} features for {n_qubits} qubits, got shape {values.shape}"
        )
    if not np.all(np.isfinite(values)):
        raise InvalidProbabilities("non-finite feature values")
    if np.min(values) < -tol or np.max(values) > 1 + tol:
        raise InvalidProbabilities("feature values must lie in [0, 1]")
    sums = to_settings(values, n_qubits).sum(axis=-1)
    if np.max(np.abs(sums - 1.0)) > tol:
        raise InvalidProbabilities("feature values do not sum to one within each setting")
    return values

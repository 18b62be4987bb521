"""Random and named quantum states.

The random ensemble is the Bures prior, sampled with the Ginibre/Haar
construction ``(1 + U) G G^H (1 + U^H)`` normalised to unit trace.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateSample, OutOfRange, ValidationError
from .qcore import dagger

_MAX_RESAMPLE = 8


def _dim(n_qubits: int) -> int:
    if n_qubits < 0:
        raise ValidationError("n_qubits must be non-negative")
    return 2**n_qubits


def ginibre(d: int, rng: np.random.Generator) -> np.ndarray:
    """d x d matrix with i.i.d. entries whose real and imaginary parts are N(0, 1)."""
    if d < 1:
        raise ValidationError("d must be positive")
    z = rng.standard_normal((d, d, 2))
    return z[..., 0] + 1j * z[..., 1]


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary from the QR decomposition of a Ginibre matrix.

    The phases of R's diagonal are folded back into Q; without that
    correction the result is not Haar distributed.
    """
    q, r = np.linalg.qr(ginibre(d, rng))
    diag = np.diagonal(r)
    phases = diag / np.abs(diag)
    return q * phases


def sample_bures(n_qubits: int, rng: np.random.Generator) -> np.ndarray:
    """One density matrix from the Bures measure on ``n_qubits`` qubits."""
    d = _dim(n_qubits)
    if d == 1:
        return np.ones((1, 1), dtype=np.complex128)
    eye = np.eye(d)
    for _ in range(_MAX_RESAMPLE):
        g = ginibre(d, rng)
        u = haar_unitary(d, rng)
        a = (eye + u) @ g
        m = a @ dagger(a)
        tr = np.trace(m).real
        if tr > 1e-300:
            rho = m / tr
            return 0.5 * (rho + dagger(rho))
    raise DegenerateSample(f"trace normaliser vanished {_MAX_RESAMPLE} times in a row")


def sample_bures_set(n_qubits: int, count: int, rng: np.random.Generator) -> list[np.ndarray]:
    return [sample_bures(n_qubits, rng) for _ in range(count)]


def bell_singlet() -> np.ndarray:
    """``|Psi-> = (|HV> - |VH>)/sqrt(2)`` as a state vector."""
    psi = np.zeros(4, dtype=np.complex128)
    psi[1] = 1.0
    psi[2] = -1.0
    return psi / np.sqrt(2.0)


def werner_state(q: float) -> np.ndarray:
    """``q |Psi-><Psi-| + (1 - q) I/4``."""
    if not 0.0 <= q <= 1.0:
        raise OutOfRange(f"Werner parameter q={q} is outside [0, 1]")
    psi = bell_singlet()
    return q * np.outer(psi, psi.conj()) + (1.0 - q) / 4.0 * np.eye(4, dtype=np.complex128)


def maximally_mixed(n_qubits: int) -> np.ndarray:
    d = _dim(n_qubits)
    return np.eye(d, dtype=np.complex128) / d


def pure_state(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128).ravel()
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())

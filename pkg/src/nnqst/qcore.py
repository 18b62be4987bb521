"""Complex matrix kernels and density-matrix primitives.

Density matrices are plain ``complex128`` arrays of shape ``(d, d)`` with
``d = 2**n``.  Everything spectral goes through :func:`hermitian_eig`.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    DimensionMismatch,
    FormatError,
    NoConvergence,
    NotHermitian,
    NotPhysical,
    ZeroMatrix,
)

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
# eigenvalues this small are rounding noise on a trace-one operator
EIG_FLOOR = 1e-14


def as_matrix(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NotPhysical("matrix has non-finite entries")
    return m


def n_qubits_of(rho: np.ndarray) -> int:
    d = rho.shape[0]
    if rho.shape != (d, d) or d < 1 or d & (d - 1):
        raise DimensionMismatch(f"density matrices must be 2^n x 2^n, got {rho.shape}")
    return d.bit_length() - 1


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def hermitian_eig(m, tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns ascending real eigenvalues and the matrix whose columns are the
    corresponding orthonormal eigenvectors.  Raises :class:`NotHermitian`
    if ``m`` deviates from its adjoint by more than ``tol`` entrywise.
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got {m.shape}")
    asym = np.max(np.abs(m - dagger(m))) if m.size else 0.0
    if asym > tol:
        raise NotHermitian(f"matrix is not Hermitian (max |m - m^H| = {asym:.3g})")
    try:
        w, v = np.linalg.eigh(0.5 * (m + dagger(m)))
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return w, v


def check_density(rho, n_qubits: int | None = None) -> np.ndarray:
    """Validate the three physical constraints and return ``rho`` as an array."""
    rho = as_matrix(rho)
    n = n_qubits_of(rho)
    if n_qubits is not None and n != n_qubits:
        raise DimensionMismatch(f"expected {n_qubits} qubits, got {n}")
    asym = np.max(np.abs(rho - dagger(rho)))
    if asym > HERMITIAN_TOL:
        raise NotPhysical(f"not Hermitian (max deviation {asym:.3g})")
    tr = np.trace(rho)
    if abs(tr - 1.0) > TRACE_TOL:
        raise NotPhysical(f"trace is {tr.real:.12g}, expected 1")
    w = np.linalg.eigvalsh(rho)
    if w[0] < -PSD_TOL:
        raise NotPhysical(f"smallest eigenvalue {w[0]:.3g} is negative")
    return rho


def is_density(rho) -> bool:
    try:
        check_density(rho)
    except (NotPhysical, DimensionMismatch):
        return False
    return True


def project_physical(t) -> np.ndarray:
    """Map an arbitrary square matrix to a state: ``T^H T / Tr(T^H T)``."""
    t = as_matrix(t)
    if t.shape[0] != t.shape[1]:
        raise DimensionMismatch(f"T must be square, got {t.shape}")
    a = dagger(t) @ t
    tr = np.trace(a).real
    if tr <= 1e-300:
        raise ZeroMatrix("Tr(T^H T) vanishes; T is the zero matrix")
    rho = a / tr
    return 0.5 * (rho + dagger(rho))


def _clamped_eigs(w: np.ndarray) -> np.ndarray:
    if w[0] < -PSD_TOL:
        raise NotPhysical(f"smallest eigenvalue {w[0]:.3g} is negative")
    return np.where(w < EIG_FLOOR, 0.0, w)


def matrix_sqrt_psd(rho) -> np.ndarray:
    """Hermitian PSD square root of a positive semi-definite matrix.

    Eigenvalues in ``[-1e-10, 0)`` are treated as rounding noise and set to
    zero; anything more negative raises :class:`NotPhysical`.
    """
    w, v = hermitian_eig(rho)
    w = _clamped_eigs(w)
    return (v * np.sqrt(w)) @ dagger(v)


def _root_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    sa = matrix_sqrt_psd(a)
    inner = sa @ b @ sa
    w, _ = hermitian_eig(0.5 * (inner + dagger(inner)))
    w = np.where(w < EIG_FLOOR, 0.0, w)
    return float(np.sum(np.sqrt(w)))


def fidelity(a, b) -> float:
    """Uhlmann fidelity ``[Tr sqrt(sqrt(a) b sqrt(a))]^2``, clipped to [0, 1]."""
    f = _root_fidelity(a, b) ** 2
    return float(min(max(f, 0.0), 1.0))


def infidelity(a, b) -> float:
    return 1.0 - fidelity(a, b)


def bures_distance(a, b) -> float:
    """``sqrt(2 (1 - Tr[(sqrt(a) b sqrt(a))^(1/2)]))``."""
    root_f = min(_root_fidelity(a, b), 1.0)
    return float(np.sqrt(2.0 * (1.0 - root_f)))


def kron(*ops) -> np.ndarray:
    """Kronecker product of any number of matrices, left to right."""
    out = np.ones((1, 1), dtype=np.complex128)
    for op in ops:
        out = np.kron(out, np.asarray(op, dtype=np.complex128))
    return out


def purity(rho) -> float:
    rho = as_matrix(rho)
    return float(np.real(np.vdot(rho, rho)))


def trace_distance(a, b) -> float:
    """Half the trace norm of ``a - b``."""
    w, _ = hermitian_eig(np.asarray(a) - np.asarray(b))
    return float(0.5 * np.sum(np.abs(w)))


def density_to_json(rho) -> dict:
    rho = as_matrix(rho)
    return {
        "n_qubits": n_qubits_of(rho),
        "re": rho.real.tolist(),
        "im": rho.imag.tolist(),
    }


def density_from_json(doc: dict, validate: bool = True) -> np.ndarray:
    try:
        n = int(doc["n_qubits"])
        re = np.asarray(doc["re"], dtype=np.float64)
        im = np.asarray(doc["im"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed density-matrix document: {exc}") from exc
    d = 2**n
    if re.shape != (d, d) or im.shape != (d, d):
        raise FormatError(f"expected {d}x{d} re/im arrays for n_qubits={n}")
    rho = re + 1j * im
    if validate:
        check_density(rho, n)
    return rho

import numpy as np
import pytest

from nnqst.rng import seeded_rng

H = np.array([[1, 0], [0, 0]], dtype=complex)
V = np.array([[0, 0], [0, 1]], dtype=complex)


@pytest.fixture
def rng():
    return seeded_rng(20240601)


def random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_hermitian(rng, d):
    a = random_complex(rng, (d, d))
    return 0.5 * (a + a.conj().T)


def random_unitary(rng, d):
    q, r = np.linalg.qr(random_complex(rng, (d, d)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_ket(rng, d):
    v = random_complex(rng, d)
    return v / np.linalg.norm(v)


def assert_physical(rho, tol=1e-10):
    rho = np.asarray(rho)
    assert np.max(np.abs(rho - rho.conj().T)) <= tol
    assert abs(np.trace(rho) - 1) <= tol
    assert np.linalg.eigvalsh(rho)[0] >= -tol


# acceptance verdicts, echoed together at the end of the session
ACCEPTANCE: dict[int, str] = {}


def report(number: int, title: str, ok: bool, detail: str) -> bool:
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title}; {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("ci", max_examples=25, deadline=None)
settings.load_profile("ci")


def random_hermitian(n, rng, fro=None):
    dim = 1 << n
    A = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    H = (A + A.conj().T) / 2
    if fro is not None:
        H *= fro / np.linalg.norm(H)
    return H


def random_matrix(n, rng):
    dim = 1 << n
    return rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))


def random_state(n, rng):
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)


def random_unitary(dim, rng):
    Q, R = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    return Q * (np.diag(R) / np.abs(np.diag(R)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# acceptance criteria report: one line per criterion, printed after the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion, ok, detail):
    ACCEPTANCE[criterion] = (bool(ok), detail)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

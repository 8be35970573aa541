"""Dense matrix and state-vector kernels.

Operators are plain ``complex128`` numpy arrays of shape ``(2**n, 2**n)``,
states are length ``2**n`` vectors and diagonal observables are length
``2**n`` vectors holding the diagonal.  Qubit 1 is the most significant bit
of the computational-basis index.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
import scipy.linalg

HERMITIAN_ATOL = 1e-10
UNITARY_ATOL = 1e-8


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver hits its iteration cap."""


def n_qubits_of(A: np.ndarray) -> int:
    """Number of qubits for a square operator or a state vector."""
    dim = A.shape[0]
    if A.ndim == 2 and A.shape[1] != dim:
        raise ValueError(f"operator must be square, got shape {A.shape}")
    n = dim.bit_length() - 1
    if dim < 2 or (1 << n) != dim:
        raise ValueError(f"dimension {dim} is not a power of two >= 2")
    return n


def as_operator(A, n_qubits: int | None = None) -> np.ndarray:
    A = np.array(A, dtype=np.complex128)
    if A.ndim != 2:
        raise ValueError("operator must be a 2-d array")
    n = n_qubits_of(A)
    if n_qubits is not None and n != n_qubits:
        raise ValueError(f"expected {n_qubits} qubits, operator has {n}")
    return A


def as_state(psi, n_qubits: int | None = None) -> np.ndarray:
    psi = np.array(psi, dtype=np.complex128).reshape(-1)
    n = n_qubits_of(psi)
    if n_qubits is not None and n != n_qubits:
        raise ValueError(f"expected {n_qubits} qubits, state has {n}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"state is not normalized (norm {norm!r})")
    return psi


def is_hermitian(A: np.ndarray, atol: float = HERMITIAN_ATOL) -> bool:
    return bool(np.max(np.abs(A - A.conj().T), initial=0.0) <= atol)


def is_unitary(U: np.ndarray, atol: float = UNITARY_ATOL) -> bool:
    eye = np.eye(U.shape[0])
    return bool(np.linalg.norm(U @ U.conj().T - eye) <= atol)


def frobenius_norm(A: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.abs(A) ** 2)))


def spectral_norm(A: np.ndarray, tol: float = 1e-8, max_iters: int = 10_000,
                  seed: int = 0) -> float:
    """Largest singular value of ``A`` by power iteration on ``A^H A``.

    The start vector is drawn from a fixed seed so the result is
    reproducible.  Iteration stops once successive Rayleigh quotients agree
    to relative tolerance ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    A = np.asarray(A, dtype=np.complex128)
    if not np.any(A):
        return 0.0
    rng = np.random.default_rng(seed)
    dim = A.shape[1]
    x = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    x /= np.linalg.norm(x)
    prev = None
    for _ in range(max_iters):
        y = A @ x
        # Rayleigh quotient of A^H A at x is ||A x||^2
        rq = float(np.vdot(y, y).real)
        z = A.conj().T @ y
        nz = np.linalg.norm(z)
        if nz == 0.0:
            # x landed in the null space; restart from a fresh direction
            x = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
            x /= np.linalg.norm(x)
            prev = None
            continue
        x = z / nz
        if prev is not None and abs(rq - prev) <= tol * rq:
            return float(np.sqrt(max(rq, 0.0)))
        prev = rq
    raise ConvergenceError(f"power iteration did not converge in {max_iters} iterations")


def diag_of(A: np.ndarray) -> np.ndarray:
    return np.array(np.diagonal(A), dtype=np.complex128)


def conjugate(A: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Return ``U A U^H``."""
    if A.shape != U.shape:
        raise ValueError(f"dimension mismatch: {A.shape} vs {U.shape}")
    if not is_unitary(U):
        raise ValueError("U is not unitary")
    out = U @ A @ U.conj().T
    if is_hermitian(A):
        out = 0.5 * (out + out.conj().T)
    return out


def hermitian_eig(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and column eigenvectors of a Hermitian matrix."""
    if not is_hermitian(A):
        raise ValueError("hermitian_eig requires a Hermitian matrix")
    w, v = scipy.linalg.eigh(A)
    return w, v


def born_distribution(psi: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Computational-basis outcome probabilities of ``U |psi>``."""
    if U.shape != (psi.shape[0], psi.shape[0]):
        raise ValueError(f"dimension mismatch: U {U.shape}, psi {psi.shape}")
    if not is_unitary(U):
        raise ValueError("U is not unitary")
    p = np.abs(U @ psi) ** 2
    return p / p.sum()


# ---------------------------------------------------------------------------
# operator file format

def operator_to_json(A: np.ndarray, fmt: str = "coo", hermitian: bool | None = None) -> dict:
    n = n_qubits_of(A)
    if fmt == "coo":
        rows, cols = np.nonzero(A)
    elif fmt == "dense":
        rows, cols = np.indices(A.shape).reshape(2, -1)
    else:
        raise ValueError(f"unknown operator format {fmt!r}")
    entries = [[int(r), int(c), float(A[r, c].real), float(A[r, c].imag)]
               for r, c in zip(rows, cols)]
    doc = {"n": n, "format": fmt, "entries": entries}
    if hermitian is not None:
        doc["hermitian"] = bool(hermitian)
    return doc


def operator_from_json(doc: dict) -> np.ndarray:
    try:
        n = int(doc["n"])
        fmt = doc["format"]
        entries = doc["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed operator document: {exc}") from exc
    if n < 1:
        raise ValueError("n must be >= 1")
    if fmt not in ("dense", "coo"):
        raise ValueError(f"unknown operator format {fmt!r}")
    dim = 1 << n
    A = np.zeros((dim, dim), dtype=np.complex128)
    seen = set()
    for i, item in enumerate(entries):
        if len(item) != 4:
            raise ValueError(f"entry {i}: expected [row, col, re, im]")
        r, c, re, im = item
        r, c = int(r), int(c)
        if not (0 <= r < dim and 0 <= c < dim):
            raise ValueError(f"entry {i}: index ({r}, {c}) out of range for n={n}")
        if (r, c) in seen:
            raise ValueError(f"entry {i}: duplicate index ({r}, {c})")
        seen.add((r, c))
        A[r, c] = complex(float(re), float(im))
    if fmt == "dense" and len(seen) != dim * dim:
        raise ValueError(f"dense format needs {dim * dim} entries, got {len(seen)}")
    if doc.get("hermitian") and not is_hermitian(A):
        raise ValueError("operator flagged hermitian but A != A^H")
    return A


def load_operator(path) -> np.ndarray:
    with open(path) as fh:
        return operator_from_json(json.load(fh))


def save_operator(path, A: np.ndarray, fmt: str = "coo", hermitian: bool | None = None) -> None:
    Path(path).write_text(json.dumps(operator_to_json(A, fmt, hermitian)))


def state_from_json(doc: dict) -> np.ndarray:
    try:
        n = int(doc["n"])
        amps = np.array([complex(float(re), float(im)) for re, im in doc["amplitudes"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed state document: {exc}") from exc
    return as_state(amps, n)


def state_to_json(psi: np.ndarray) -> dict:
    return {"n": n_qubits_of(psi),
            "amplitudes": [[float(a.real), float(a.imag)] for a in psi]}


def load_state(path) -> np.ndarray:
    with open(path) as fh:
        return state_from_json(json.load(fh))


def save_state(path, psi: np.ndarray) -> None:
    Path(path).write_text(json.dumps(state_to_json(psi)))


def operator_digest(A: np.ndarray) -> str:
    """Content hash of an operator, stable across platforms."""
    A = np.ascontiguousarray(A, dtype="<c16")
    h = hashlib.sha256()
    h.update(str(A.shape).encode())
    h.update(A.tobytes())
    return h.hexdigest()

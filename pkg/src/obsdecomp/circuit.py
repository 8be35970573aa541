"""The L-depth brick ansatz ``U_L(theta)``.

Layer 0 is one arbitrary single-qubit gate per qubit.  Brick layers
alternate between pairs (1,2),(3,4),... (odd layers) and (2,3),(4,5),...
(even layers), open boundary.  Every two-qubit gate is ``(A (x) B) . iSWAP``.

Parameter layout: ``3*n`` layer-0 Euler angles qubit by qubit, then for each
brick layer and each gate six angles (first-qubit triple, second-qubit
triple).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import as_operator, as_state, n_qubits_of

ISWAP = np.array([[1, 0, 0, 0],
                  [0, 0, 1j, 0],
                  [0, 1j, 0, 0],
                  [0, 0, 0, 1]], dtype=np.complex128)


@dataclass(frozen=True)
class AnsatzSpec:
    n_qubits: int
    depth: int

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        if self.depth < 0:
            raise ValueError("depth must be >= 0")

    def pairs(self, layer: int) -> list[tuple[int, int]]:
        """0-based qubit pairs of brick layer ``layer`` (1-based)."""
        start = 0 if layer % 2 == 1 else 1
        return [(q, q + 1) for q in range(start, self.n_qubits - 1, 2)]

    @property
    def n_gates(self) -> int:
        return sum(len(self.pairs(layer)) for layer in range(1, self.depth + 1))

    @property
    def param_count(self) -> int:
        return 3 * self.n_qubits + 6 * self.n_gates

    def check(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape[-1] != self.param_count:
            raise ValueError(f"expected {self.param_count} parameters, got {theta.shape[-1]}")
        return theta

    def zeros(self) -> np.ndarray:
        return np.zeros(self.param_count)


def _u3(theta, phi, lam):
    """Vectorised Euler gate; angle arrays broadcast to shape ``(..., 2, 2)``."""
    theta, phi, lam = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (theta, phi, lam)))
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    out = np.empty(theta.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = c
    out[..., 0, 1] = -np.exp(1j * lam) * s
    out[..., 1, 0] = np.exp(1j * phi) * s
    out[..., 1, 1] = np.exp(1j * (phi + lam)) * c
    return out


def single_qubit_gate(theta: float, phi: float, lam: float) -> np.ndarray:
    return _u3(theta, phi, lam)


def _two_qubit(angles: np.ndarray) -> np.ndarray:
    A = _u3(angles[..., 0], angles[..., 1], angles[..., 2])
    B = _u3(angles[..., 3], angles[..., 4], angles[..., 5])
    AB = np.einsum("...ij,...kl->...ikjl", A, B).reshape(A.shape[:-2] + (4, 4))
    return AB @ ISWAP


def two_qubit_gate(angles) -> np.ndarray:
    angles = np.asarray(angles, dtype=float)
    if angles.shape != (6,):
        raise ValueError("two_qubit_gate takes six angles")
    return _two_qubit(angles)


def gate_list(spec: AnsatzSpec, theta: np.ndarray) -> list[tuple[tuple[int, ...], np.ndarray]]:
    """Gates in application order as ``(qubits, matrix)``.

    ``theta`` may carry leading batch dimensions; matrices then do too.
    """
    theta = spec.check(theta)
    n = spec.n_qubits
    gates = []
    for q in range(n):
        a = theta[..., 3 * q:3 * q + 3]
        gates.append(((q,), _u3(a[..., 0], a[..., 1], a[..., 2])))
    pos = 3 * n
    for layer in range(1, spec.depth + 1):
        for pair in spec.pairs(layer):
            gates.append((pair, _two_qubit(theta[..., pos:pos + 6])))
            pos += 6
    return gates


def _apply_local(T: np.ndarray, G: np.ndarray, qubits: tuple[int, ...], n: int) -> np.ndarray:
    """Left-multiply the qubit index of ``T`` (shape ``(B, 2**n, R)``) by a local gate."""
    B, D, R = T.shape
    k = len(qubits)
    t = T.reshape((B,) + (2,) * n + (R,))
    src = [1 + q for q in qubits]
    dst = list(range(1, 1 + k))
    t = np.moveaxis(t, src, dst)
    shape = t.shape
    t = (G @ t.reshape(B, 1 << k, -1)).reshape(shape)
    return np.moveaxis(t, dst, src).reshape(B, D, R)


def _apply_gates(spec: AnsatzSpec, theta: np.ndarray, T: np.ndarray) -> np.ndarray:
    """``U_L(theta) @ T`` for ``T`` of shape ``(B, 2**n, R)``; theta shape ``(B, d)`` or ``(d,)``."""
    for qubits, G in gate_list(spec, theta):
        T = _apply_local(T, G, qubits, spec.n_qubits)
    return T


def batched_unitaries(spec: AnsatzSpec, thetas: np.ndarray) -> np.ndarray:
    """Stack of circuit unitaries, shape ``(B, 2**n, 2**n)``."""
    thetas = np.atleast_2d(spec.check(thetas))
    dim = 1 << spec.n_qubits
    eye = np.broadcast_to(np.eye(dim, dtype=np.complex128), (len(thetas), dim, dim)).copy()
    return _apply_gates(spec, thetas, eye)


def batched_conjugated_diagonals(spec: AnsatzSpec, thetas: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Diagonals of ``U(theta_b) A U(theta_b)^H`` for a stack of parameter vectors."""
    U = batched_unitaries(spec, thetas)
    # diag(U A U^H)_x = sum_j (U A)_xj conj(U_xj)
    return np.einsum("bxj,bxj->bx", U @ A, U.conj())


def batched_conjugations(spec: AnsatzSpec, thetas: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Stack of ``U(theta_b) A U(theta_b)^H``."""
    U = batched_unitaries(spec, thetas)
    return (U @ A) @ np.conj(np.swapaxes(U, 1, 2))


def build_unitary(spec: AnsatzSpec, theta) -> np.ndarray:
    theta = spec.check(theta)
    if theta.ndim != 1:
        raise ValueError("theta must be a flat parameter vector")
    return batched_unitaries(spec, theta[None, :])[0]


def apply_circuit_to_matrix(spec: AnsatzSpec, theta, A: np.ndarray) -> np.ndarray:
    """``U A U^H`` by streaming gates over rows, then over columns."""
    A = as_operator(A, spec.n_qubits)
    theta = spec.check(theta)
    left = _apply_gates(spec, theta, A[None])[0]
    # U (U A)^H = U A^H U^H, whose adjoint is the result
    return _apply_gates(spec, theta, left.conj().T[None])[0].conj().T


def apply_circuit_to_state(spec: AnsatzSpec, theta, psi: np.ndarray) -> np.ndarray:
    psi = as_state(psi, spec.n_qubits)
    theta = spec.check(theta)
    return _apply_gates(spec, theta, psi[None, :, None])[0, :, 0]


def check_dims(spec: AnsatzSpec, A: np.ndarray) -> None:
    if n_qubits_of(A) != spec.n_qubits:
        raise ValueError(f"operator has {n_qubits_of(A)} qubits, ansatz has {spec.n_qubits}")

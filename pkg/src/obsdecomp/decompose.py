"""Greedy projected decomposition into circuit-diagonalisable terms.

Each step picks ``theta`` minimising the off-diagonal Frobenius mass of
``U(theta) R U(theta)^H`` for the current residual ``R``, keeps the diagonal
as ``lam`` and subtracts ``U^H diag(lam) U`` from the residual.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .circuit import (AnsatzSpec, apply_circuit_to_matrix,
                      batched_conjugations, build_unitary, check_dims)
from .linalg import (diag_of, frobenius_norm, is_hermitian, operator_digest,
                     spectral_norm)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 0.05
    max_iters: int = 500
    restarts: int = 4
    fd_step: float = 1e-4
    grad_tol: float = 1e-10
    rng_seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.fd_step <= 0 or self.grad_tol <= 0:
            raise ValueError("learning_rate, fd_step and grad_tol must be positive")
        if self.max_iters < 1 or self.restarts < 1:
            raise ValueError("max_iters and restarts must be >= 1")
        if self.rng_seed < 0:
            raise ValueError("rng_seed must be non-negative")

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizerConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown optimizer keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class DecompTerm:
    theta: np.ndarray
    lam: np.ndarray

    def operator(self, spec: AnsatzSpec) -> np.ndarray:
        U = build_unitary(spec, self.theta)
        return (U.conj().T * self.lam) @ U


@dataclass
class Decomposition:
    spec: AnsatzSpec
    terms: list[DecompTerm]
    residual_fro: list[float]
    residual_spec: list[float]
    target_hash: str
    hermitian: bool
    truncated: bool = False
    eps1: float | None = None

    def __len__(self) -> int:
        return len(self.terms)

    def to_json(self) -> dict:
        return {
            "n": self.spec.n_qubits,
            "L": self.spec.depth,
            "hermitian": self.hermitian,
            "target_hash": self.target_hash,
            "eps1": self.eps1,
            "terms": [{"theta": [float(x) for x in t.theta],
                       "lambda_re": [float(x) for x in t.lam.real],
                       "lambda_im": [float(x) for x in np.imag(t.lam)]}
                      for t in self.terms],
            "residual_fro": [float(x) for x in self.residual_fro],
            "residual_spec": [float(x) for x in self.residual_spec],
            "truncated": self.truncated,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Decomposition":
        try:
            spec = AnsatzSpec(int(doc["n"]), int(doc["L"]))
            hermitian = bool(doc["hermitian"])
            terms = []
            for i, t in enumerate(doc["terms"]):
                theta = spec.check(np.array(t["theta"], dtype=float))
                re = np.array(t["lambda_re"], dtype=float)
                im = np.array(t["lambda_im"], dtype=float)
                if re.shape != (1 << spec.n_qubits,) or im.shape != re.shape:
                    raise ValueError(f"term {i}: lambda has wrong length")
                lam = re if hermitian else re + 1j * im
                terms.append(DecompTerm(theta, lam))
            return cls(spec=spec, terms=terms,
                       residual_fro=[float(x) for x in doc["residual_fro"]],
                       residual_spec=[float(x) for x in doc["residual_spec"]],
                       target_hash=str(doc["target_hash"]), hermitian=hermitian,
                       truncated=bool(doc.get("truncated", False)),
                       eps1=doc.get("eps1"))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed checkpoint: {exc}") from exc


def save_checkpoint(path, d: Decomposition, extra: dict | None = None) -> None:
    doc = d.to_json()
    if extra:
        doc.update(extra)
    tmp = Path(str(path) + ".tmp")
    tmp.write_text(json.dumps(doc))
    tmp.replace(path)


def load_checkpoint(path) -> Decomposition:
    with open(path) as fh:
        return Decomposition.from_json(json.load(fh))


# ---------------------------------------------------------------------------
# cost and gradient

def offdiag_cost(spec: AnsatzSpec, theta, A: np.ndarray) -> float:
    """Frobenius norm of the off-diagonal part of ``U A U^H``."""
    check_dims(spec, A)
    M = apply_circuit_to_matrix(spec, theta, A)
    np.fill_diagonal(M, 0.0)
    return frobenius_norm(M)


def _squared_costs(spec, thetas, A, fro2):
    # summing off-diagonal entries directly avoids the cancellation in
    # ||A||^2 - ||diag||^2 near the optimum
    M = batched_conjugations(spec, thetas, A)
    idx = np.arange(M.shape[1])
    M[:, idx, idx] = 0.0
    return np.sum(M.real ** 2 + M.imag ** 2, axis=(1, 2))


def fd_gradient(spec: AnsatzSpec, theta, A: np.ndarray, fd_step: float) -> np.ndarray:
    """Central-difference gradient of the squared off-diagonal cost."""
    if fd_step <= 0:
        raise ValueError("fd_step must be positive")
    check_dims(spec, A)
    grad, _ = _grad_and_cost(spec, spec.check(theta), A, frobenius_norm(A) ** 2, fd_step)
    return grad


def _grad_and_cost(spec, theta, A, fro2, h):
    d = theta.size
    shifts = np.vstack([np.zeros(d), h * np.eye(d), -h * np.eye(d)])
    c = _squared_costs(spec, theta + shifts, A, fro2)
    return (c[1:d + 1] - c[d + 1:]) / (2 * h), c[0]


def _descend(spec, A, fro2, cfg, rng):
    theta = rng.uniform(0.0, 2 * np.pi, spec.param_count)
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    best_cost, best_theta = math.inf, theta.copy()
    for t in range(1, cfg.max_iters + 1):
        g, c = _grad_and_cost(spec, theta, A, fro2, cfg.fd_step)
        if c < best_cost:
            best_cost, best_theta = c, theta.copy()
        if np.linalg.norm(g) <= cfg.grad_tol:
            break
        m = ADAM_BETA1 * m + (1 - ADAM_BETA1) * g
        v = ADAM_BETA2 * v + (1 - ADAM_BETA2) * g * g
        mhat = m / (1 - ADAM_BETA1 ** t)
        vhat = v / (1 - ADAM_BETA2 ** t)
        theta = theta - cfg.learning_rate * mhat / (np.sqrt(vhat) + ADAM_EPS)
    else:
        c = _squared_costs(spec, theta[None], A, fro2)[0]
        if c < best_cost:
            best_cost, best_theta = c, theta.copy()
    return best_theta, best_cost


def optimize_theta(spec: AnsatzSpec, A: np.ndarray, cfg: OptimizerConfig,
                   step: int = 0, workers: int = 1) -> tuple[np.ndarray, float]:
    """Multistart Adam descent on the squared off-diagonal cost.

    Restart ``r`` draws its start point from the stream
    ``(cfg.rng_seed, step, r)`` so the result does not depend on
    ``workers``.  Returns the best parameters and their (unsquared) cost.
    """
    check_dims(spec, A)
    fro2 = frobenius_norm(A) ** 2

    def run(r):
        return _descend(spec, A, fro2, cfg, np.random.default_rng([cfg.rng_seed, step, r]))

    if workers > 1 and cfg.restarts > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(cfg.restarts)))
    else:
        results = [run(r) for r in range(cfg.restarts)]
    # strict < keeps the lowest restart index on ties
    best_theta, best = results[0]
    for theta, c in results[1:]:
        if c < best:
            best_theta, best = theta, c
    return best_theta, offdiag_cost(spec, best_theta, A)


# ---------------------------------------------------------------------------
# greedy loop

def _subtract_term(R: np.ndarray, spec: AnsatzSpec, term: DecompTerm) -> np.ndarray:
    return R - term.operator(spec)


def greedy_decompose(H: np.ndarray, spec: AnsatzSpec, eps1: float, max_terms: int,
                     cfg: OptimizerConfig | None = None, resume: Decomposition | None = None,
                     on_term: Callable[[Decomposition], None] | None = None,
                     workers: int = 1) -> Decomposition:
    """Decompose ``H`` into at most ``max_terms`` terms ``U^H diag(lam) U``.

    Stops once the spectral norm of the residual is at most ``eps1``.  If the
    budget runs out first the result is flagged ``truncated``.  Passing a
    previous result as ``resume`` continues from its residual; ``on_term``
    is called after every new term (checkpointing hook).
    """
    if eps1 <= 0:
        raise ValueError("eps1 must be positive")
    if max_terms < 1:
        raise ValueError("max_terms must be >= 1")
    cfg = cfg or OptimizerConfig()
    check_dims(spec, H)
    H = np.asarray(H, dtype=np.complex128)
    hermitian = is_hermitian(H)
    target_hash = operator_digest(H)

    if resume is not None:
        if resume.target_hash != target_hash:
            raise ValueError("checkpoint was produced for a different operator")
        if resume.spec != spec:
            raise ValueError(f"checkpoint ansatz {resume.spec} differs from {spec}")
        d = resume
        d.eps1 = eps1
        R = H.copy()
        for term in d.terms:
            R = _subtract_term(R, spec, term)
    else:
        d = Decomposition(spec=spec, terms=[], residual_fro=[frobenius_norm(H)],
                          residual_spec=[spectral_norm(H)], target_hash=target_hash,
                          hermitian=hermitian, eps1=eps1)
        R = H.copy()

    while d.residual_spec[-1] > eps1 and len(d.terms) < max_terms:
        k = len(d.terms)
        theta, _ = optimize_theta(spec, R, cfg, step=k, workers=workers)
        lam = diag_of(apply_circuit_to_matrix(spec, theta, R))
        if hermitian:
            lam = lam.real.copy()
        term = DecompTerm(theta, lam)
        R = _subtract_term(R, spec, term)
        d.terms.append(term)
        d.residual_fro.append(frobenius_norm(R))
        d.residual_spec.append(spectral_norm(R))
        if on_term is not None:
            on_term(d)
    d.truncated = d.residual_spec[-1] > eps1
    return d


def reconstruct(d: Decomposition) -> np.ndarray:
    dim = 1 << d.spec.n_qubits
    out = np.zeros((dim, dim), dtype=np.complex128)
    for term in d.terms:
        out += term.operator(d.spec)
    return out


def residual_operator(H: np.ndarray, d: Decomposition) -> np.ndarray:
    """``H`` minus all terms, subtracted in order (matches the greedy bookkeeping)."""
    R = np.asarray(H, dtype=np.complex128).copy()
    for term in d.terms:
        R = _subtract_term(R, d.spec, term)
    return R

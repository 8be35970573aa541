"""Sample-complexity floor for a fixed circuit family.

``T >= tr(H0^2)^2 / (eps^2 * delta(H0) * 4**n)`` where ``H0`` is the
traceless part of ``H`` and ``delta(H0)`` is the largest squared expectation
of ``H0`` over states ``U(theta)^H |b>``.  The supremum is approximated by
multistart gradient ascent, so the reported ``delta`` is an achieved value
and the reported ``T`` over-estimates the floor.  The order constant is 1.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .circuit import AnsatzSpec, batched_conjugated_diagonals, check_dims
from .decompose import ADAM_BETA1, ADAM_BETA2, ADAM_EPS, OptimizerConfig

DELTA_ZERO_TOL = 1e-12
FLOOR_NOTE = "order-of-magnitude floor (constant 1); an upper estimate of the true bound"


@dataclass
class BoundReport:
    delta_h0: float
    trace_h0_sq: float
    epsilon: float
    lower_bound_T: float
    argmax_theta: np.ndarray
    argmax_bitstring: int
    restarts_used: int
    unbounded: bool = False
    note: str = FLOOR_NOTE

    def to_json(self) -> dict:
        return {
            "delta_h0": self.delta_h0,
            "trace_h0_sq": self.trace_h0_sq,
            "epsilon": self.epsilon,
            "lower_bound_T": None if self.unbounded else self.lower_bound_T,
            "argmax_theta": [float(x) for x in self.argmax_theta],
            "argmax_bitstring": self.argmax_bitstring,
            "restarts_used": self.restarts_used,
            "unbounded": self.unbounded,
            "note": self.note,
        }


def traceless_part(H: np.ndarray) -> np.ndarray:
    H = np.asarray(H, dtype=np.complex128)
    dim = H.shape[0]
    return H - (np.trace(H) / dim) * np.eye(dim)


def _diag_values(spec, thetas, H0):
    return batched_conjugated_diagonals(spec, thetas, H0).real


def _ascend(spec, H0, cfg, rng):
    d = spec.param_count
    h = cfg.fd_step
    shifts = np.vstack([np.zeros(d), h * np.eye(d), -h * np.eye(d)])
    theta = rng.uniform(0.0, 2 * np.pi, d)
    m = np.zeros(d)
    v = np.zeros(d)
    best = (-1.0, theta.copy(), 0)
    for t in range(1, cfg.max_iters + 1):
        vals = _diag_values(spec, theta + shifts, H0)
        sq = vals ** 2
        # argmax picks the lowest b on ties
        b = int(np.argmax(sq[0]))
        if sq[0, b] > best[0]:
            best = (float(sq[0, b]), theta.copy(), b)
        g = (sq[1:d + 1, b] - sq[d + 1:, b]) / (2 * h)
        if np.linalg.norm(g) <= cfg.grad_tol:
            break
        m = ADAM_BETA1 * m + (1 - ADAM_BETA1) * g
        v = ADAM_BETA2 * v + (1 - ADAM_BETA2) * g * g
        mhat = m / (1 - ADAM_BETA1 ** t)
        vhat = v / (1 - ADAM_BETA2 ** t)
        theta = theta + cfg.learning_rate * mhat / (np.sqrt(vhat) + ADAM_EPS)
    else:
        sq = _diag_values(spec, theta[None], H0)[0] ** 2
        b = int(np.argmax(sq))
        if sq[b] > best[0]:
            best = (float(sq[b]), theta.copy(), b)
    return best


def delta_h0(H0: np.ndarray, spec: AnsatzSpec, cfg: OptimizerConfig | None = None,
             workers: int = 1) -> tuple[float, np.ndarray, int]:
    """Best achieved ``max_b <b|U H0 U^H|b>^2`` over multistart ascent.

    Returns ``(delta, theta, b)``.  Restart ``r`` is seeded from
    ``(cfg.rng_seed, r)``.
    """
    cfg = cfg or OptimizerConfig(restarts=16)
    check_dims(spec, H0)
    H0 = np.asarray(H0, dtype=np.complex128)
    if abs(np.trace(H0)) > 1e-8:
        raise ValueError("delta_h0 expects a traceless operator")
    if not np.any(H0):
        return 0.0, spec.zeros(), 0

    def run(r):
        return _ascend(spec, H0, cfg, np.random.default_rng([cfg.rng_seed, r]))

    if workers > 1 and cfg.restarts > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(cfg.restarts)))
    else:
        results = [run(r) for r in range(cfg.restarts)]
    best = results[0]
    for res in results[1:]:
        if res[0] > best[0]:
            best = res
    return best


def lower_bound(H: np.ndarray, spec: AnsatzSpec, epsilon: float,
                cfg: OptimizerConfig | None = None, workers: int = 1) -> BoundReport:
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    cfg = cfg or OptimizerConfig(restarts=16)
    H0 = traceless_part(H)
    n = spec.n_qubits
    tr2 = float(np.trace(H0 @ H0).real)
    if tr2 <= 0.0 or not np.any(H0):
        return BoundReport(0.0, 0.0, epsilon, 0.0, spec.zeros(), 0, 0,
                           note="traceless part vanishes; nothing to estimate")
    delta, theta, b = delta_h0(H0, spec, cfg, workers)
    if delta <= DELTA_ZERO_TOL:
        return BoundReport(delta, tr2, epsilon, float("inf"), theta, b, cfg.restarts,
                           unbounded=True,
                           note="delta(H0) vanished along every tried direction; bound unbounded")
    T = tr2 ** 2 / (epsilon ** 2 * delta * 4.0 ** n)
    return BoundReport(delta, tr2, epsilon, T, theta, b, cfg.restarts)

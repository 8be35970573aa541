"""Benchmark instances and the experiment runner.

Two workloads: ground-energy estimation for a random sparse Hermitian
matrix, and the inner product ``<psi|phi_tau>`` of a random state with a
Slater determinant, read off as ``2 tr(|psi'><psi'| O)`` with
``O = |1>|phi_tau><0^{n+1}|``.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass
from functools import reduce

import jsonschema
import numpy as np

from .circuit import AnsatzSpec
from .decompose import Decomposition, OptimizerConfig, greedy_decompose, reconstruct
from .estimate import estimate, exact_expectation, make_plan, required_shots
from .linalg import frobenius_norm, hermitian_eig

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SparseHamiltonianSpec:
    n_qubits: int
    nnz: int
    magnitude_scale: float = 1.0
    rng_seed: int = 0


@dataclass
class SlaterSpec:
    n_modes: int
    tau: int
    unitary: np.ndarray
    rng_seed: int = 0

    def __post_init__(self):
        U = np.asarray(self.unitary, dtype=np.complex128)
        if U.shape != (self.n_modes, self.n_modes):
            raise ValueError(f"unitary must be {self.n_modes}x{self.n_modes}")
        if np.linalg.norm(U @ U.conj().T - np.eye(self.n_modes)) > 1e-10:
            raise ValueError("unitary rows are not orthonormal")
        self.unitary = U


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with phase correction."""
    Z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    return Q * (np.diagonal(R) / np.abs(np.diagonal(R)))


def random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return psi / np.linalg.norm(psi)


def _completable(remaining, free_diag, free_off):
    # some d <= free_diag with d = remaining (mod 2) and (remaining - d) / 2 <= free_off
    d = max(remaining - 2 * free_off, 0)
    if (remaining - d) % 2:
        d += 1
    return d <= free_diag


def gen_sparse_hamiltonian(spec: SparseHamiltonianSpec) -> np.ndarray:
    """Random Hermitian matrix with exactly ``nnz`` stored nonzeros.

    Upper-triangle positions are visited in a random order; a diagonal pick
    costs one nonzero, an off-diagonal pick two (the entry and its mirror).
    A pick is taken only if the remaining budget stays reachable.
    """
    n, nnz = spec.n_qubits, spec.nnz
    dim = 1 << n
    if not (1 <= nnz <= dim * dim):
        raise ValueError(f"nnz must lie in [1, {dim * dim}], got {nnz}")
    rng = np.random.default_rng(spec.rng_seed)
    rows, cols = np.triu_indices(dim)
    order = rng.permutation(rows.size)
    free_diag, free_off = dim, dim * (dim - 1) // 2
    remaining = nnz
    H = np.zeros((dim, dim), dtype=np.complex128)
    for idx in order:
        if remaining == 0:
            break
        i, j = int(rows[idx]), int(cols[idx])
        if i == j:
            free_diag -= 1
            if _completable(remaining - 1, free_diag, free_off):
                H[i, i] = rng.standard_normal()
                remaining -= 1
        else:
            free_off -= 1
            if remaining >= 2 and _completable(remaining - 2, free_diag, free_off):
                z = complex(rng.standard_normal(), rng.standard_normal()) / np.sqrt(2)
                H[i, j] = z
                H[j, i] = np.conj(z)
                remaining -= 2
    if remaining:
        raise RuntimeError("sparse sampler failed to place every nonzero")
    return H * (spec.magnitude_scale / frobenius_norm(H))


def ground_state(H: np.ndarray) -> tuple[float, np.ndarray]:
    w, v = hermitian_eig(H)
    return float(w[0]), v[:, 0] / np.linalg.norm(v[:, 0])


_SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=np.complex128)
_Z = np.diag([1.0, -1.0]).astype(np.complex128)
_I2 = np.eye(2, dtype=np.complex128)


def creation_operator(j: int, n: int) -> np.ndarray:
    """Jordan-Wigner ``b_j^dagger`` (0-based mode ``j``, mode 0 leftmost)."""
    factors = [_Z] * j + [_SIGMA_PLUS] + [_I2] * (n - j - 1)
    return reduce(np.kron, factors)


def slater_state(spec: SlaterSpec) -> np.ndarray:
    """``b~_1^dag ... b~_tau^dag |0^n>`` with ``b~_k = sum_j U_kj b_j``."""
    n, tau = spec.n_modes, spec.tau
    if not (0 <= tau <= n):
        raise ValueError(f"tau must lie in [0, {n}]")
    creators = [creation_operator(j, n) for j in range(n)]
    psi = np.zeros(1 << n, dtype=np.complex128)
    psi[0] = 1.0
    for k in reversed(range(tau)):
        op = sum(np.conj(spec.unitary[k, j]) * creators[j] for j in range(n))
        psi = op @ psi
    return psi / np.linalg.norm(psi)


def ancilla_superposition(psi: np.ndarray) -> np.ndarray:
    """``(|0^{n+1}> + |1>|psi>) / sqrt(2)``."""
    psi = np.asarray(psi, dtype=np.complex128)
    out = np.zeros(2 * psi.size, dtype=np.complex128)
    out[0] = 1.0
    out[psi.size:] += psi
    return out / np.sqrt(2)


def inner_product_operator(phi: np.ndarray) -> np.ndarray:
    """Rank-one ``|1>|phi><0^{n+1}|``."""
    phi = np.asarray(phi, dtype=np.complex128)
    O = np.zeros((2 * phi.size, 2 * phi.size), dtype=np.complex128)
    O[phi.size:, 0] = phi
    return O


def hermitian_split(O: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``H1 = (O + O^H)/2``, ``H2 = -i (O - O^H)/2`` so that ``O = H1 + i H2``."""
    Oh = O.conj().T
    return (O + Oh) / 2, -1j * (O - Oh) / 2


# ---------------------------------------------------------------------------
# benchmark runner

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["workload", "n", "L", "K", "eps1", "eps2", "delta", "repetitions"],
    "additionalProperties": False,
    "properties": {
        "workload": {"enum": ["sparse", "inner_product"]},
        "n": {"type": "integer", "minimum": 1, "maximum": 10},
        "L": {"type": "integer", "minimum": 0},
        "K": {"type": "integer", "minimum": 1},
        "eps1": {"type": "number", "exclusiveMinimum": 0},
        "eps2": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "repetitions": {"type": "integer", "minimum": 1},
        "shots": {"type": "array", "items": {"type": ["integer", "null"], "minimum": 0}},
        "nnz": {"type": "integer", "minimum": 1},
        "magnitude_scale": {"type": "number", "exclusiveMinimum": 0},
        "tau": {"type": "integer", "minimum": 0},
        "dry_run": {"type": "boolean"},
        "seeds": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "instance": {"type": "integer", "minimum": 0},
                "optimizer": {"type": "integer", "minimum": 0},
                "experiment": {"type": "integer", "minimum": 0},
            },
        },
        "optimizer": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "learning_rate": {"type": "number", "exclusiveMinimum": 0},
                "max_iters": {"type": "integer", "minimum": 1},
                "restarts": {"type": "integer", "minimum": 1},
                "fd_step": {"type": "number", "exclusiveMinimum": 0},
                "grad_tol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
    },
}


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


def validate_config(cfg: dict) -> None:
    """Raise :class:`ConfigError` listing every schema violation with its path."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    problems = []
    for err in sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path)):
        path = "/".join(str(p) for p in err.absolute_path) or "<root>"
        problems.append(f"{path}: {err.message}")
    if not problems and cfg["workload"] == "inner_product" and cfg.get("tau", 1) > cfg["n"]:
        problems.append(f"tau: {cfg['tau']} exceeds n={cfg['n']}")
    if not problems and cfg["workload"] == "sparse":
        dim = 1 << cfg["n"]
        if cfg.get("nnz", cfg["n"] ** 2) > dim * dim:
            problems.append(f"nnz: exceeds 4**n = {dim * dim}")
    if problems:
        raise ConfigError(problems)


def derive_seed(*parts: int) -> int:
    """Deterministic 63-bit seed from integer parts."""
    return int(np.random.SeedSequence(list(parts)).generate_state(2, np.uint64)[0] >> np.uint64(1))


def build_instance(cfg: dict):
    """Return ``(target, state, spec, exact)`` for a validated config."""
    seeds = cfg.get("seeds", {})
    inst = seeds.get("instance", 0)
    n = cfg["n"]
    if cfg["workload"] == "sparse":
        H = gen_sparse_hamiltonian(SparseHamiltonianSpec(
            n, cfg.get("nnz", n * n), cfg.get("magnitude_scale", 1.0), inst))
        energy, psi = ground_state(H)
        return H, psi, AnsatzSpec(n, cfg["L"]), complex(energy)
    rng = np.random.default_rng(inst)
    tau = cfg.get("tau", 1)
    phi = slater_state(SlaterSpec(n, tau, random_unitary(n, rng), inst))
    psi = random_state(n, rng)
    O = inner_product_operator(phi)
    # the estimator targets tr(rho' O); the reported quantity is twice that
    return O, ancilla_superposition(psi), AnsatzSpec(n + 1, cfg["L"]), complex(np.vdot(psi, phi))


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


RESULT_COLUMNS = ["repetition", "seed", "shots", "value_re", "value_im",
                  "exact_re", "exact_im", "abs_error"]


def _bootstrap_ci(errors: np.ndarray, seed: int, draws: int = 2000) -> tuple[float, float]:
    rng = np.random.default_rng(seed)
    means = rng.choice(errors, size=(draws, errors.size), replace=True).mean(axis=1)
    lo, hi = np.percentile(means, [2.5, 97.5])
    return float(lo), float(hi)


def run_benchmark(cfg: dict, decomposition: Decomposition | None = None,
                  on_term=None, workers: int = 1) -> dict:
    """Decompose, then estimate for every (shot budget, repetition) pair.

    Returns ``{"results_csv", "residuals_csv", "summary", "decomposition"}``
    with CSV bodies as strings.  ``shots`` entries of ``null`` mean the
    ``(eps2, delta)`` budget; ``dry_run`` skips estimation entirely.
    """
    validate_config(cfg)
    seeds = cfg.get("seeds", {})
    opt = OptimizerConfig.from_dict({**cfg.get("optimizer", {}), "rng_seed": seeds.get("optimizer", 0)})
    target, state, spec, exact = build_instance(cfg)
    scale = 2.0 if cfg["workload"] == "inner_product" else 1.0

    d = greedy_decompose(target, spec, cfg["eps1"], cfg["K"], opt, resume=decomposition,
                         on_term=on_term, workers=workers)
    log.info("decomposition: %d terms, residual spec %.3g", len(d), d.residual_spec[-1])

    res = io.StringIO()
    w = csv.writer(res, lineterminator="\n")
    w.writerow(["k", "fro_norm", "spec_norm"])
    for k, (f, s) in enumerate(zip(d.residual_fro, d.residual_spec)):
        w.writerow([k, fmt(f), fmt(s)])

    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    budgets = cfg.get("shots", [None])
    budgets = [b for b in budgets if b != 0]
    dry = cfg.get("dry_run", False) or len(d) == 0 or not budgets
    per_budget = {}
    exp_seed = seeds.get("experiment", 0)
    if not dry:
        plan = make_plan(d)
        rule_T = int(np.prod(required_shots(plan, cfg["eps2"], cfg["delta"])))
        for bi, budget in enumerate(budgets):
            errors = []
            for r in range(cfg["repetitions"]):
                seed = derive_seed(exp_seed, bi, r)
                rep = estimate(state, d, cfg["eps2"], cfg["delta"], seed, shots=budget)
                value = scale * rep.value
                err = abs(value - exact)
                errors.append(err)
                w.writerow([r, seed, rep.shots_used, fmt(value.real), fmt(value.imag),
                            fmt(exact.real), fmt(exact.imag), fmt(err)])
            errors = np.array(errors)
            lo, hi = _bootstrap_ci(errors, derive_seed(exp_seed, bi, 1 << 20))
            key = str(budget if budget is not None else rule_T)
            per_budget[key] = {
                "mean_abs_error": float(errors.mean()),
                "median_abs_error": float(np.median(errors)),
                "p90_abs_error": float(np.percentile(errors, 90)),
                "bootstrap95": [lo, hi],
                "repetitions": int(errors.size),
            }

    summary = {
        "workload": cfg["workload"],
        "n": cfg["n"],
        "L": cfg["L"],
        "terms": len(d),
        "truncated": d.truncated,
        "exact_re": exact.real,
        "exact_im": exact.imag,
        "residual_fro": d.residual_fro,
        "residual_spec": d.residual_spec,
        "l1_norm": make_plan(d).l1_norm if len(d) else 0.0,
        "dry_run": dry,
        "errors_by_shots": per_budget,
    }
    if len(d):
        # exact value of the decomposed (approximate) operator, for error attribution
        hat = scale * exact_expectation(state, reconstruct(d))
        summary["exact_hat_re"], summary["exact_hat_im"] = hat.real, hat.imag
    return {"results_csv": out.getvalue(), "residuals_csv": res.getvalue(),
            "summary": summary, "decomposition": d}


def load_config(path) -> dict:
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"line {exc.lineno}: {exc.msg}"]) from exc

"""Importance-sampling estimator over decomposition terms.

Each shot draws a term ``k`` with probability proportional to
``||lam_k||_2 = max_b |lam_k(b)|``, measures the state after ``U(theta_k)``
in the computational basis and records ``lam_k(b) / p_k``.  Shots are
aggregated by median of means.

A shot consumes two consecutive uniforms from the generator (term, then
outcome), so the vectorised path and repeated :func:`draw_sample` calls see
the same stream and give identical values.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .circuit import apply_circuit_to_state
from .decompose import Decomposition
from .linalg import n_qubits_of

MOM_BATCH_CONST = 8.0
MOM_SIZE_CONST = 4.0
_CHUNK = 1 << 16


@dataclass
class SamplingPlan:
    probs: np.ndarray
    lambda_spec_norms: np.ndarray
    l1_norm: float

    @property
    def cdf(self) -> np.ndarray:
        return _cdf(self.probs)


def _cdf(p: np.ndarray) -> np.ndarray:
    # zero-probability tail entries share the final value 1.0 and are never hit
    c = np.cumsum(p, axis=-1)
    return c / c[..., -1:]


@dataclass
class EstimateReport:
    value: complex
    shots_used: int
    batches: int
    batch_size: int
    per_term_counts: list[int]
    rng_seed: int
    raw_sample_mean: complex
    raw_sample_variance: float
    dropped_shots: int = 0
    plan_l1_norm: float = 0.0

    def to_json(self) -> dict:
        d = asdict(self)
        for key in ("value", "raw_sample_mean"):
            z = complex(d.pop(key))
            d[f"{key}_re"] = z.real
            d[f"{key}_im"] = z.imag
        return d


def make_plan(d: Decomposition) -> SamplingPlan:
    if len(d.terms) == 0:
        raise ValueError("cannot sample from an empty decomposition")
    norms = np.array([np.max(np.abs(t.lam)) for t in d.terms])
    total = float(norms.sum())
    if total == 0.0:
        raise ValueError("all decomposition terms are zero; nothing to sample")
    return SamplingPlan(probs=norms / total, lambda_spec_norms=norms, l1_norm=total)


def _ensemble(psi):
    """Normalise a pure state or a ``[(weight, state), ...]`` ensemble."""
    if isinstance(psi, np.ndarray):
        return [(1.0, psi)]
    members = [(float(w), np.asarray(s, dtype=np.complex128)) for w, s in psi]
    total = sum(w for w, _ in members)
    if total <= 0 or any(w < 0 for w, _ in members):
        raise ValueError("ensemble weights must be non-negative with positive sum")
    return [(w / total, s) for w, s in members]


def outcome_tables(psi, d: Decomposition) -> np.ndarray:
    """Born distribution of every term, shape ``(K, 2**n)``."""
    members = _ensemble(psi)
    for _, s in members:
        if n_qubits_of(s) != d.spec.n_qubits:
            raise ValueError(f"state has {n_qubits_of(s)} qubits, decomposition has {d.spec.n_qubits}")
    return np.array([_term_probs(members, d.spec, t.theta) for t in d.terms])


def _term_probs(members, spec, theta) -> np.ndarray:
    p = sum(w * np.abs(apply_circuit_to_state(spec, theta, s)) ** 2 for w, s in members)
    return p / p.sum()


def _lambda_table(d: Decomposition) -> np.ndarray:
    lam = np.array([t.lam for t in d.terms])
    return lam.real.astype(float) if d.hermitian else lam.astype(np.complex128)


def draw_sample(psi, d: Decomposition, plan: SamplingPlan, rng: np.random.Generator):
    """One shot of the estimator: ``lam_k(b) / p_k``."""
    k = int(np.searchsorted(plan.cdf, rng.random(), side="right"))
    term = d.terms[k]
    members = _ensemble(psi)
    if n_qubits_of(members[0][1]) != d.spec.n_qubits:
        raise ValueError("state and decomposition dimensions differ")
    cdf = _cdf(_term_probs(members, d.spec, term.theta))
    b = int(np.searchsorted(cdf, rng.random(), side="right"))
    lam = term.lam.real if d.hermitian else term.lam
    return lam[b] / plan.probs[k]


def draw_samples(psi, d: Decomposition, plan: SamplingPlan, rng: np.random.Generator,
                 shots: int, tables: np.ndarray | None = None):
    """``shots`` draws plus per-term counts, vectorised over shots."""
    if tables is None:
        tables = outcome_tables(psi, d)
    K = tables.shape[0]
    cdfs = _cdf(tables)
    pcdf = plan.cdf
    lam = _lambda_table(d)
    # zero-probability rows are never selected; leave them as zeros
    lam = np.divide(lam, plan.probs[:, None], out=np.zeros_like(lam),
                    where=plan.probs[:, None] > 0)
    out = np.empty(shots, dtype=lam.dtype)
    counts = np.zeros(K, dtype=np.int64)
    for start in range(0, shots, _CHUNK):
        m = min(_CHUNK, shots - start)
        u = rng.random((m, 2))
        ks = np.searchsorted(pcdf, u[:, 0], side="right")
        # outcome index = number of cdf entries <= u, per selected term
        bs = (cdfs[ks] <= u[:, 1:2]).sum(axis=1)
        out[start:start + m] = lam[ks, bs]
        counts += np.bincount(ks, minlength=K)
    return out, counts


def median_of_means(samples, batches: int):
    """Median over equal contiguous batch means; a trailing remainder is dropped.

    Real and imaginary parts take their medians independently.  An even
    number of batches uses the lower median.
    """
    samples = np.asarray(samples)
    if samples.size == 0:
        raise ValueError("median_of_means needs at least one sample")
    if batches < 1:
        raise ValueError("batches must be >= 1")
    size = samples.size // batches
    if size == 0:
        raise ValueError(f"{samples.size} samples cannot fill {batches} batches")
    means = samples[:size * batches].reshape(batches, size).mean(axis=1)

    def lower_median(x):
        return np.sort(x)[(len(x) - 1) // 2]

    if np.iscomplexobj(means):
        return complex(lower_median(means.real), lower_median(means.imag))
    return float(lower_median(means))


def _ceil(x: float) -> int:
    # absorb float noise such as 4 / 0.1**2 = 399.99999999999994
    return math.ceil(round(x, 9))


def required_shots(plan: SamplingPlan, eps2: float, delta: float) -> tuple[int, int]:
    """``(batches, batch_size)`` for accuracy ``eps2`` with failure probability ``delta``.

    Each batch mean is within ``eps2`` with probability >= 3/4 by Chebyshev
    (raw variance <= l1_norm**2); the median of ``8 ln(1/delta)`` batches
    fails with probability <= delta by Hoeffding.
    """
    if not (0 < eps2 < 1) or not (0 < delta < 1):
        raise ValueError("eps2 and delta must lie in (0, 1)")
    batches = max(1, _ceil(MOM_BATCH_CONST * math.log(1 / delta)))
    batch_size = max(1, _ceil(MOM_SIZE_CONST * plan.l1_norm ** 2 / eps2 ** 2))
    return batches, batch_size


def estimate(psi, d: Decomposition, eps2: float = 0.05, delta: float = 0.1,
             rng_seed: int = 0, shots: int | None = None) -> EstimateReport:
    """Estimate ``tr(rho H_hat)`` for the decomposed operator.

    ``psi`` is a state vector or a weighted ensemble ``[(w, psi), ...]``.
    With ``shots`` given, the budget is fixed and split into the same number
    of batches as the ``(eps2, delta)`` rule would use.
    """
    plan = make_plan(d)
    batches, batch_size = required_shots(plan, eps2, delta)
    dropped = 0
    if shots is not None:
        if shots < 1:
            raise ValueError("shots must be >= 1")
        batches = min(batches, shots)
        batch_size = shots // batches
        dropped = shots - batches * batch_size
    total = batches * batch_size
    rng = np.random.default_rng(rng_seed)
    samples, counts = draw_samples(psi, d, plan, rng, total)
    value = median_of_means(samples, batches)
    return EstimateReport(
        value=complex(value),
        shots_used=total,
        batches=batches,
        batch_size=batch_size,
        per_term_counts=[int(c) for c in counts],
        rng_seed=int(rng_seed),
        raw_sample_mean=complex(samples.mean()),
        raw_sample_variance=float(np.var(samples)),
        dropped_shots=dropped,
        plan_l1_norm=plan.l1_norm,
    )


def exact_expectation(psi, A: np.ndarray) -> complex:
    """``tr(rho A)`` for a pure state or ensemble."""
    return complex(sum(w * np.vdot(s, A @ s) for w, s in _ensemble(psi)))

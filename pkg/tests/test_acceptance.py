"""Acceptance criteria 1-10.  Each test records a PASS/FAIL line that is
printed in the terminal summary, then asserts."""
import json
import math
import time
from functools import reduce

import numpy as np
import pytest

from obsdecomp.bound import lower_bound
from obsdecomp.circuit import AnsatzSpec, build_unitary
from obsdecomp.cli import main
from obsdecomp.decompose import (Decomposition, DecompTerm, OptimizerConfig, greedy_decompose,
                                 reconstruct)
from obsdecomp.estimate import draw_samples, estimate, exact_expectation, make_plan
from obsdecomp.pauli import (PauliString, PauliSum, cover_angles, cover_to_term,
                             greedy_cover_grouping, grouped_reconstruction, pauli_expand)
from obsdecomp.workloads import (SlaterSpec, ancilla_superposition, hermitian_split,
                                 inner_product_operator, random_unitary, slater_state)

from conftest import random_hermitian, random_state, record

Z = np.diag([1.0, -1.0]).astype(complex)


def binomial_limit(trials, p):
    return trials * p + 3 * math.sqrt(trials * p * (1 - p))


@pytest.fixture(scope="module")
def greedy_run():
    H = random_hermitian(4, np.random.default_rng(2024), fro=1.0)
    t0 = time.perf_counter()
    d = greedy_decompose(H, AnsatzSpec(4, 2), eps1=1e-9, max_terms=30,
                         cfg=OptimizerConfig(restarts=4, rng_seed=0))
    return d, time.perf_counter() - t0


def test_criterion_01_greedy_convergence(greedy_run):
    d, elapsed = greedy_run
    fro = np.array(d.residual_fro)
    monotone = bool(np.all(np.diff(fro) <= 0))
    ratio = d.residual_spec[-1] / d.residual_spec[0]
    ok = monotone and ratio <= 0.5 and elapsed <= 300 and len(d) == 30
    record(1, ok, f"fro non-increasing={monotone}, spec ratio={ratio:.3g} (<=0.5), "
                  f"{elapsed:.0f}s (<=300s)")
    assert monotone
    assert ratio <= 0.5
    assert elapsed <= 300


def test_criterion_02_frobenius_decay(greedy_run):
    d, _ = greedy_run
    y = np.log(np.array(d.residual_fro))
    k = np.arange(y.size)
    slope, intercept = np.polyfit(k, y, 1)
    fit = slope * k + intercept
    r2 = 1 - np.sum((y - fit) ** 2) / np.sum((y - y.mean()) ** 2)
    record(2, slope < 0 and r2 >= 0.8, f"log-fro slope={slope:.4f} (<0), R^2={r2:.4f} (>=0.8)")
    assert slope < 0
    assert r2 >= 0.8


def test_criterion_03_single_pauli():
    rng = np.random.default_rng(3)
    worst = 0.0
    words = []
    while len(words) < 10:
        w = "".join(rng.choice(list("IXYZ"), size=3))
        if w != "III":
            words.append(w)
    for w in words:
        d = greedy_decompose(PauliString(w).matrix(), AnsatzSpec(3, 0), eps1=1e-6, max_terms=1,
                             cfg=OptimizerConfig(restarts=8))
        worst = max(worst, d.residual_spec[-1])
    record(3, worst <= 1e-6, f"worst one-term spectral residual={worst:.2e} over {words}")
    assert worst <= 1e-6


def _random_decomposition(n, L, K, rng, hermitian=True):
    spec = AnsatzSpec(n, L)
    lams = rng.normal(size=(K, 1 << n))
    if not hermitian:
        lams = lams + 1j * rng.normal(size=(K, 1 << n))
    terms = [DecompTerm(rng.uniform(0, 2 * np.pi, spec.param_count), lam) for lam in lams]
    return Decomposition(spec, terms, [0.0], [0.0], "random", hermitian)


def test_criterion_04_unbiasedness():
    rng = np.random.default_rng(4)
    d = _random_decomposition(3, 2, 6, rng)
    psi = random_state(3, rng)
    N = 10 ** 6
    t0 = time.perf_counter()
    samples, _ = draw_samples(psi, d, make_plan(d), np.random.default_rng(44), N)
    elapsed = time.perf_counter() - t0
    exact = exact_expectation(psi, reconstruct(d)).real
    dev = abs(samples.mean() - exact)
    limit = 5 * samples.std() / math.sqrt(N)
    record(4, dev <= limit and elapsed <= 120,
           f"|mean-exact|={dev:.2e} (<= {limit:.2e}), {elapsed:.1f}s (<=120s)")
    assert dev <= limit
    assert elapsed <= 120


def test_criterion_05_variance_bound():
    worst = 0.0
    for case in range(20):
        rng = np.random.default_rng([5, case])
        n = 1 + case % 3
        d = _random_decomposition(n, case % 3, 1 + case % 5, rng, hermitian=case % 4 != 0)
        plan = make_plan(d)
        samples, _ = draw_samples(random_state(n, rng), d, plan, rng, 200_000)
        worst = max(worst, np.var(samples) / plan.l1_norm ** 2)
    record(5, worst <= 1.05, f"max var/l1^2={worst:.4f} (<=1.05) over 20 cases")
    assert worst <= 1.05


def test_criterion_06_error_contract():
    d = greedy_decompose(np.kron(Z, Z), AnsatzSpec(2, 0), eps1=1e-6, max_terms=3)
    bell = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    fails = sum(abs(estimate(bell, d, 0.05, 0.1, rng_seed=s).value - 1) > 0.05
                for s in range(100))
    limit = binomial_limit(100, 0.1)
    ok = d.residual_spec[-1] <= 1e-6 and fails <= limit
    record(6, ok, f"residual={d.residual_spec[-1]:.1e}, failures={fails}/100 (<= {limit:.0f})")
    assert d.residual_spec[-1] <= 1e-6
    assert fails <= limit


def exact_inner_product_decomposition(O):
    """Depth-0 decomposition of a non-Hermitian O from the Pauli covers of its Hermitian parts."""
    coeffs = {}
    for factor, H in zip((1, 1j), hermitian_split(O)):
        for a, p in pauli_expand(H, tol=1e-13).terms:
            coeffs[p.letters] = coeffs.get(p.letters, 0) + factor * a
    words = sorted(coeffs)
    size = PauliSum([(abs(coeffs[w]), PauliString(w)) for w in words])
    re = PauliSum([(coeffs[w].real, PauliString(w)) for w in words])
    im = PauliSum([(coeffs[w].imag, PauliString(w)) for w in words])
    n = size.n_qubits
    terms = []
    for g in greedy_cover_grouping(size):
        lam = cover_to_term(g, re)[1] + 1j * cover_to_term(g, im)[1]
        terms.append(DecompTerm(cover_angles(g.cover), lam))
    return Decomposition(AnsatzSpec(n, 0), terms, [0.0], [0.0], "inner-product", False)


def test_criterion_07_inner_product():
    eps2, delta = 0.05, 0.1
    worst_identity, worst_recon, fails = 0.0, 0.0, 0
    for trial in range(20):
        rng = np.random.default_rng([7, trial])
        tau = 1 + trial % 2
        psi = random_state(3, rng)
        phi = slater_state(SlaterSpec(3, tau, random_unitary(3, rng)))
        O = inner_product_operator(phi)
        prime = ancilla_superposition(psi)
        exact = 2 * np.trace(np.outer(prime, prime.conj()) @ O)
        worst_identity = max(worst_identity, abs(exact - np.vdot(psi, phi)))
        d = exact_inner_product_decomposition(O)
        worst_recon = max(worst_recon, np.abs(reconstruct(d) - O).max())
        rep = estimate(prime, d, eps2, delta, rng_seed=trial)
        fails += abs(rep.value - exact / 2) > eps2
    limit = binomial_limit(20, delta)
    ok = worst_identity <= 1e-12 and worst_recon <= 1e-10 and fails <= limit
    record(7, ok, f"identity err={worst_identity:.1e} (<=1e-12), reconstruction err="
                  f"{worst_recon:.1e}, estimate failures={fails}/20 (<= {limit:.1f})")
    assert worst_identity <= 1e-12
    assert worst_recon <= 1e-10
    assert fails <= limit


def test_criterion_08_lower_bound():
    spec = AnsatzSpec(3, 2)
    zzz = reduce(np.kron, [Z] * 3)
    eps = 0.1
    deltas, scaled = [], []
    for trial in range(3):
        theta = np.random.default_rng([8, trial]).uniform(0, 2 * np.pi, spec.param_count)
        U = build_unitary(spec, theta)
        rep = lower_bound(U.conj().T @ zzz @ U, spec, eps, OptimizerConfig(restarts=16))
        deltas.append(rep.delta_h0)
        scaled.append(rep.lower_bound_T * eps ** 2)
    ok = min(deltas) >= 1 - 1e-4 and all(0.99 <= s <= 1.01 for s in scaled)
    record(8, ok, f"min delta={min(deltas):.6f} (>=0.9999), T*eps^2 in "
                  f"[{min(scaled):.4f}, {max(scaled):.4f}] (within [0.99, 1.01])")
    assert min(deltas) >= 1 - 1e-4
    assert all(0.99 <= s <= 1.01 for s in scaled)


def test_criterion_09_grouping():
    worst = 0.0
    for trial in range(10):
        rng = np.random.default_rng([9, trial])
        words = set()
        size = int(rng.integers(5, 20))
        while len(words) < size:
            words.add("".join(rng.choice(list("IXYZ"), size=4)))
        S = PauliSum([(float(rng.normal()), PauliString(w)) for w in sorted(words)])
        worst = max(worst, np.abs(grouped_reconstruction(greedy_cover_grouping(S), S)
                                  - S.to_matrix()).max())
    cover = greedy_cover_grouping(PauliSum([(1.0, PauliString("ZXI")),
                                            (1.0, PauliString("ZIY"))]))
    example = len(cover) == 1 and cover[0].cover.letters == "ZXY"
    record(9, worst <= 1e-9 and example,
           f"max reconstruction err={worst:.1e} (<=1e-9), ZXI+ZIY cover="
           f"{'+'.join(g.cover.letters for g in cover)}")
    assert worst <= 1e-9
    assert example


def test_criterion_10_determinism(tmp_path, capsys):
    cfg = {"workload": "sparse", "n": 3, "L": 1, "K": 5, "eps1": 1e-6, "eps2": 0.1,
           "delta": 0.1, "repetitions": 5, "shots": [1000, None], "nnz": 9,
           "seeds": {"instance": 10, "optimizer": 1, "experiment": 2},
           "optimizer": {"max_iters": 100, "restarts": 2}}
    path = tmp_path / "bench.json"
    path.write_text(json.dumps(cfg))
    outputs = []
    for run in ("a", "b"):
        assert main(["bench", str(path), "--out-dir", str(tmp_path / run)]) in (0, 2)
        info = json.loads(capsys.readouterr().out)
        outputs.append((tmp_path / run / info["manifest"][:16] / "results.csv").read_bytes())
    same = outputs[0] == outputs[1]
    rows = outputs[0].count(b"\n") - 2
    record(10, same and rows == 10, f"results.csv byte-identical={same} ({rows} rows)")
    assert same
    assert rows == 10

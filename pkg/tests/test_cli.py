import csv
import json

import numpy as np
import pytest

from obsdecomp.cli import EXIT_DATA, EXIT_OK, EXIT_TRUNCATED, EXIT_USAGE, main
from obsdecomp.decompose import load_checkpoint, reconstruct
from obsdecomp.linalg import load_operator, save_operator, save_state

from conftest import random_hermitian

FAST = '{"max_iters": 30, "restarts": 1}'


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# manifest ")
    return list(csv.DictReader(lines[1:]))


@pytest.fixture
def zz(tmp_path):
    p = tmp_path / "zz.txt"
    p.write_text("1.0 ZZ\n")
    return p


@pytest.fixture
def bell(tmp_path):
    p = tmp_path / "bell.json"
    save_state(p, np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2))
    return p


@pytest.mark.parametrize("cmd", ["decompose", "estimate", "bound", "bench"])
def test_help(cmd, capsys):
    with pytest.raises(SystemExit) as exc:
        main([cmd, "--help"])
    assert exc.value.code == 0
    assert "--" in capsys.readouterr().out


def test_usage_errors(capsys, zz):
    with pytest.raises(SystemExit) as exc:
        main(["decompose", str(zz), "--bogus"])
    assert exc.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == EXIT_USAGE
    code, _, err = run(capsys, "decompose", zz, "--optimizer-json", "{bad")
    assert code == EXIT_USAGE and "optimizer" in err
    code, _, _ = run(capsys, "decompose", zz, "--optimizer-json", '{"nope": 1}')
    assert code == EXIT_USAGE


def test_decompose_pauli_zz(capsys, tmp_path, zz):
    out = tmp_path / "ck.json"
    code, stdout, _ = run(capsys, "decompose", zz, "--L", 0, "--eps1", 1e-8, "--out", out)
    assert code == EXIT_OK
    summary = json.loads(stdout)
    assert summary["terms"] == 1 and summary["residual_spec"] <= 1e-8
    d = load_checkpoint(out)
    assert len(d) == 1
    doc = json.loads(out.read_text())
    assert doc["manifest"] == summary["manifest"]
    rows = read_csv(tmp_path / "ck_residuals.csv")
    assert [r["k"] for r in rows] == ["0", "1"]

    before = out.read_bytes()
    code, stdout, _ = run(capsys, "decompose", zz, "--L", 0, "--eps1", 1e-8, "--out", out,
                          "--resume", out)
    assert code == EXIT_OK
    assert json.loads(stdout)["terms"] == 1
    assert out.read_bytes() == before


def test_decompose_truncated_then_resume(capsys, tmp_path, rng):
    op = tmp_path / "h.json"
    H = random_hermitian(2, rng)
    save_operator(op, H, fmt="dense", hermitian=True)
    ck = tmp_path / "ck.json"
    args = ["decompose", op, "--L", 1, "--eps1", 1e-12, "--optimizer-json", FAST, "--out", ck]
    assert run(capsys, *args, "--K", 2)[0] == EXIT_TRUNCATED
    assert run(capsys, *args, "--K", 3, "--resume", ck)[0] == EXIT_TRUNCATED
    resumed = load_checkpoint(ck)
    fresh = tmp_path / "fresh.json"
    run(capsys, "decompose", op, "--L", 1, "--eps1", 1e-12, "--optimizer-json", FAST,
        "--out", fresh, "--K", 3)
    assert [t.theta.tolist() for t in resumed.terms] == \
        [t.theta.tolist() for t in load_checkpoint(fresh).terms]


def test_decompose_coo_round_trip(capsys, tmp_path, rng):
    H = random_hermitian(2, rng)
    H[0, 3] = H[3, 0] = 0
    op = tmp_path / "h.json"
    save_operator(op, H, fmt="coo")
    ck = tmp_path / "ck.json"
    run(capsys, "decompose", op, "--L", 1, "--K", 3, "--eps1", 1e-12,
        "--optimizer-json", FAST, "--out", ck)
    d = load_checkpoint(ck)
    gap = np.linalg.norm(load_operator(op) - reconstruct(d))
    assert gap == pytest.approx(d.residual_fro[-1], abs=1e-8)


def test_decompose_data_errors(capsys, tmp_path, zz):
    bad = tmp_path / "bad.txt"
    bad.write_text("1.0 ZQ\n")
    code, _, err = run(capsys, "decompose", bad)
    assert code == EXIT_DATA and "line 1" in err
    code, _, _ = run(capsys, "decompose", tmp_path / "missing.json")
    assert code == EXIT_DATA
    code, _, err = run(capsys, "decompose", zz, "--n", 3)
    assert code == EXIT_DATA and "--n" in err


def test_estimate_z_on_zero(capsys, tmp_path):
    z = tmp_path / "z.txt"
    z.write_text("1.0 Z\n")
    ck = tmp_path / "ck.json"
    run(capsys, "decompose", z, "--L", 0, "--out", ck)
    st = tmp_path / "zero.json"
    save_state(st, np.array([1, 0], dtype=complex))
    code, stdout, _ = run(capsys, "estimate", ck, "--state", st)
    assert code == EXIT_OK
    rep = json.loads(stdout)["reports"][0]
    assert rep["value_re"] == 1.0 and rep["value_im"] == 0.0


def test_estimate_repetitions_and_determinism(capsys, tmp_path, zz, bell):
    ck = tmp_path / "ck.json"
    run(capsys, "decompose", zz, "--L", 0, "--out", ck)
    op = tmp_path / "zz.json"
    save_operator(op, np.diag([1.0, -1, -1, 1]))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        code, _, _ = run(capsys, "estimate", ck, "--state", bell, "--operator", op,
                         "--repetitions", 50, "--shots", 400, "--seed", 3, "--csv", path,
                         "--out", tmp_path / "r.json")
        assert code == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    rows = read_csv(a)
    assert len(rows) == 50
    assert list(rows[0]) == ["seed", "T", "value_re", "value_im", "abs_error_vs_exact"]
    assert all(r["abs_error_vs_exact"] != "" for r in rows)


def test_estimate_dimension_mismatch(capsys, tmp_path, zz):
    ck = tmp_path / "ck.json"
    run(capsys, "decompose", zz, "--L", 0, "--out", ck)
    st = tmp_path / "s.json"
    save_state(st, np.array([1, 0], dtype=complex))
    code, _, err = run(capsys, "estimate", ck, "--state", st)
    assert code == EXIT_DATA and "qubits" in err
    code, _, _ = run(capsys, "estimate", ck)
    assert code == EXIT_USAGE


def test_bound_examples(capsys, tmp_path):
    zzz = tmp_path / "zzz.txt"
    zzz.write_text("1.0 ZZZ\n")
    code, stdout, _ = run(capsys, "bound", zzz, "--L", 1, "--restarts", 2, "--epsilon", 0.1)
    assert code == EXIT_OK
    rep = json.loads(stdout)
    assert rep["delta_h0"] >= 1 - 1e-6
    _, stdout, _ = run(capsys, "bound", zzz, "--L", 1, "--restarts", 2, "--epsilon", 0.05)
    assert json.loads(stdout)["lower_bound_T"] == pytest.approx(4 * rep["lower_bound_T"])
    ident = tmp_path / "id.txt"
    ident.write_text("1.0 II\n")
    _, stdout, _ = run(capsys, "bound", ident, "--L", 1)
    rep = json.loads(stdout)
    assert rep["lower_bound_T"] == 0.0 and "nothing to estimate" in rep["note"]


def bench_config(tmp_path, **extra):
    cfg = {"workload": "sparse", "n": 2, "L": 1, "K": 4, "eps1": 1e-6, "eps2": 0.2,
           "delta": 0.2, "repetitions": 3, "shots": [300, None],
           "optimizer": {"max_iters": 40, "restarts": 1}, "seeds": {"instance": 1}}
    cfg.update(extra)
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return p


def test_bench_end_to_end(capsys, tmp_path):
    cfg = bench_config(tmp_path)
    code, stdout, _ = run(capsys, "bench", cfg, "--out-dir", tmp_path / "runs")
    info = json.loads(stdout)
    assert code == (EXIT_TRUNCATED if info["truncated"] else EXIT_OK)
    out = tmp_path / "runs" / info["manifest"][:16]
    for name in ("results.csv", "residuals.csv", "summary.json", "manifest.json",
                 "checkpoint.json"):
        assert (out / name).is_file()
    assert len(read_csv(out / "results.csv")) == 6
    first = (out / "results.csv").read_bytes()
    code, _, _ = run(capsys, "bench", cfg, "--out-dir", tmp_path / "runs", "--fresh")
    assert (out / "results.csv").read_bytes() == first
    code, _, _ = run(capsys, "bench", cfg, "--out-dir", tmp_path / "runs")
    assert (out / "results.csv").read_bytes() == first


def test_bench_invalid_workload(capsys, tmp_path):
    cfg = bench_config(tmp_path, workload="dense", eps2=5)
    code, _, err = run(capsys, "bench", cfg)
    assert code == EXIT_DATA
    assert "workload" in err and "eps2" in err


def test_threads_env(capsys, tmp_path, zz, monkeypatch):
    monkeypatch.setenv("OBSDECOMP_THREADS", "two")
    code, _, err = run(capsys, "decompose", zz, "--L", 0, "--out", tmp_path / "c.json")
    assert code == EXIT_USAGE and "OBSDECOMP_THREADS" in err
    monkeypatch.setenv("OBSDECOMP_THREADS", "2")
    code, _, _ = run(capsys, "decompose", zz, "--L", 0, "--out", tmp_path / "c.json")
    assert code == EXIT_OK

"""Command-line entry point: ``obsdecomp {decompose,estimate,bound,bench}``.

Exit codes: 0 success, 2 decomposition truncated at its term budget,
64 usage error, 65 data error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import platform
import sys
import time
from dataclasses import asdict
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from . import bound as bound_mod
from .circuit import AnsatzSpec
from .decompose import (OptimizerConfig, greedy_decompose, load_checkpoint,
                        save_checkpoint)
from .estimate import estimate, exact_expectation
from .linalg import load_operator, load_state, n_qubits_of, operator_digest
from .pauli import parse_pauli_sum
from .workloads import (ConfigError, build_instance, derive_seed, fmt,
                        load_config, run_benchmark, validate_config)

EXIT_OK = 0
EXIT_TRUNCATED = 2
EXIT_USAGE = 64
EXIT_DATA = 65

log = logging.getLogger("obsdecomp")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _versions() -> dict:
    try:
        own = version("artifact")
    except PackageNotFoundError:
        own = "unknown"
    return {"obsdecomp": own, "numpy": np.__version__, "python": platform.python_version()}


class Manifest:
    """Run provenance.  The digest covers inputs only, never timings."""

    def __init__(self, command: str, argv: list[str], inputs: dict, seeds: dict):
        self.command = command
        self.argv = argv
        self.inputs = inputs
        self.seeds = seeds
        self.versions = _versions()
        self.timings: dict[str, float] = {}
        ident = {"command": command, "inputs": inputs, "seeds": seeds, "versions": self.versions}
        self.digest = hashlib.sha256(json.dumps(ident, sort_keys=True).encode()).hexdigest()

    def phase(self, name: str):
        manifest = self

        class _Timer:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                manifest.timings[name] = time.perf_counter() - self.t0

        return _Timer()

    def to_json(self) -> dict:
        return {"digest": self.digest, "command": self.command, "argv": self.argv,
                "inputs": self.inputs, "seeds": self.seeds, "versions": self.versions,
                "wall_clock_s": self.timings}


def _file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("OBSDECOMP_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"OBSDECOMP_THREADS must be an integer, got {env!r}") from None
    return 1


def _optimizer(args, restarts_default: int | None = None) -> OptimizerConfig:
    opts = {}
    if getattr(args, "optimizer_json", None):
        src = args.optimizer_json
        text = Path(src).read_text() if Path(src).is_file() else src
        try:
            opts = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"--optimizer-json: {exc}") from None
    if restarts_default is not None:
        opts.setdefault("restarts", restarts_default)
    if getattr(args, "restarts", None) is not None:
        opts["restarts"] = args.restarts
    opts["rng_seed"] = args.seed
    try:
        return OptimizerConfig.from_dict(opts)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"optimizer config: {exc}") from None


def _load_target(path, n: int | None) -> np.ndarray:
    p = Path(path)
    if p.suffix == ".json":
        H = load_operator(p)
    else:
        H = parse_pauli_sum(p.read_text()).to_matrix()
    if n is not None and n_qubits_of(H) != n:
        raise ValueError(f"--n {n} does not match the operator's {n_qubits_of(H)} qubits")
    return H


def _write_residuals(path, d, digest: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# manifest {digest}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "fro_norm", "spec_norm"])
        for k, (f, s) in enumerate(zip(d.residual_fro, d.residual_spec)):
            w.writerow([k, fmt(f), fmt(s)])


# ---------------------------------------------------------------------------
# commands

def cmd_decompose(args) -> int:
    H = _load_target(args.input, args.n)
    n = n_qubits_of(H)
    cfg = _optimizer(args)
    spec = AnsatzSpec(n, args.L)
    out = Path(args.out)
    residuals = Path(args.residuals) if args.residuals else out.with_name(out.stem + "_residuals.csv")
    manifest = Manifest("decompose", args.argv,
                        {"operator": operator_digest(H), "n": n, "L": args.L, "K": args.K,
                         "eps1": args.eps1, "optimizer": asdict(cfg)},
                        {"optimizer": args.seed})
    resume = load_checkpoint(args.resume) if args.resume else None
    start_terms = len(resume) if resume is not None else 0

    def checkpoint(d):
        save_checkpoint(out, d, {"manifest": manifest.digest})
        log.info("term %d: residual fro %.4g spec %.4g", len(d), d.residual_fro[-1], d.residual_spec[-1])

    with manifest.phase("decompose"):
        d = greedy_decompose(H, spec, args.eps1, args.K, cfg, resume=resume,
                             on_term=checkpoint, workers=_threads(args))
    if resume is None or len(d) != start_terms or Path(args.resume).resolve() != out.resolve():
        save_checkpoint(out, d, {"manifest": manifest.digest})
        _write_residuals(residuals, d, manifest.digest)
    print(json.dumps({"checkpoint": str(out), "terms": len(d), "truncated": d.truncated,
                      "residual_fro": d.residual_fro[-1], "residual_spec": d.residual_spec[-1],
                      "manifest": manifest.digest}))
    return EXIT_TRUNCATED if d.truncated else EXIT_OK


def cmd_estimate(args) -> int:
    d = load_checkpoint(args.checkpoint)
    exact = None
    if args.state:
        psi = load_state(args.state)
        inputs = {"state": _file_digest(args.state)}
        if args.operator:
            exact = exact_expectation(psi, load_operator(args.operator))
    elif args.config:
        cfg = load_config(args.config)
        validate_config(cfg)
        _, psi, _, exact = build_instance(cfg)
        if cfg["workload"] == "inner_product":
            # the checkpoint estimates tr(rho' O) = <psi|phi> / 2
            exact = exact / 2
        inputs = {"config": _file_digest(args.config)}
    else:
        raise UsageError("one of --state or --config is required")
    if n_qubits_of(psi) != d.spec.n_qubits:
        raise ValueError(f"state has {n_qubits_of(psi)} qubits, checkpoint has {d.spec.n_qubits}")
    inputs.update({"checkpoint": _file_digest(args.checkpoint), "eps2": args.eps2,
                   "delta": args.delta, "shots": args.shots, "repetitions": args.repetitions})
    manifest = Manifest("estimate", args.argv, inputs, {"estimate": args.seed})

    reports = []
    with manifest.phase("estimate"):
        for r in range(args.repetitions):
            seed = args.seed if args.repetitions == 1 else derive_seed(args.seed, r)
            reports.append(estimate(psi, d, args.eps2, args.delta, seed, shots=args.shots))

    doc = {"manifest": manifest.to_json(), "reports": [rep.to_json() for rep in reports]}
    if exact is not None:
        doc["exact_re"], doc["exact_im"] = exact.real, exact.imag
    text = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    if args.csv:
        new = not Path(args.csv).exists()
        with open(args.csv, "a", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if new:
                fh.write(f"# manifest {manifest.digest}\n")
                w.writerow(["seed", "T", "value_re", "value_im", "abs_error_vs_exact"])
            for rep in reports:
                err = "" if exact is None else fmt(abs(rep.value - exact))
                w.writerow([rep.rng_seed, rep.shots_used, fmt(rep.value.real),
                            fmt(rep.value.imag), err])
    return EXIT_OK


def cmd_bound(args) -> int:
    H = _load_target(args.input, args.n)
    spec = AnsatzSpec(n_qubits_of(H), args.L)
    cfg = _optimizer(args, restarts_default=16)
    manifest = Manifest("bound", args.argv,
                        {"operator": operator_digest(H), "L": args.L, "epsilon": args.epsilon,
                         "optimizer": asdict(cfg)}, {"optimizer": args.seed})
    with manifest.phase("bound"):
        rep = bound_mod.lower_bound(H, spec, args.epsilon, cfg, workers=_threads(args))
    doc = rep.to_json()
    doc["manifest"] = manifest.digest
    text = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = load_config(args.config)
    validate_config(cfg)
    manifest = Manifest("bench", args.argv, {"config": cfg}, cfg.get("seeds", {}))
    out = Path(args.out_dir) / manifest.digest[:16]
    out.mkdir(parents=True, exist_ok=True)
    ckpt = out / "checkpoint.json"
    resume = load_checkpoint(ckpt) if ckpt.exists() and not args.fresh else None

    with manifest.phase("bench"):
        result = run_benchmark(cfg, decomposition=resume, workers=_threads(args),
                               on_term=lambda d: save_checkpoint(ckpt, d, {"manifest": manifest.digest}))
    save_checkpoint(ckpt, result["decomposition"], {"manifest": manifest.digest})
    header = f"# manifest {manifest.digest}\n"
    (out / "results.csv").write_text(header + result["results_csv"])
    (out / "residuals.csv").write_text(header + result["residuals_csv"])
    summary = dict(result["summary"], manifest=manifest.digest)
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    (out / "manifest.json").write_text(json.dumps(manifest.to_json(), indent=2) + "\n")
    print(json.dumps({"output_dir": str(out), "manifest": manifest.digest,
                      "terms": summary["terms"], "truncated": summary["truncated"]}))
    return EXIT_TRUNCATED if summary["truncated"] else EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="obsdecomp", description="Observable decomposition for shallow circuits.")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads for optimizer restarts (env OBSDECOMP_THREADS)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("decompose", help="greedy decomposition of an operator")
    d.add_argument("input", help="operator JSON (.json) or Pauli-sum text file")
    d.add_argument("--n", type=int, help="expected number of qubits")
    d.add_argument("--L", type=int, default=1, help="ansatz depth (default 1)")
    d.add_argument("--K", type=int, default=40, help="maximum number of terms (default 40)")
    d.add_argument("--eps1", type=float, default=1e-3, help="spectral-norm target (default 1e-3)")
    d.add_argument("--seed", type=int, default=0, help="optimizer seed")
    d.add_argument("--optimizer-json", help="optimizer settings as a JSON file or inline JSON")
    d.add_argument("--resume", help="continue from this checkpoint")
    d.add_argument("--out", default="checkpoint.json", help="checkpoint path")
    d.add_argument("--residuals", help="residual CSV path (default <out>_residuals.csv)")
    d.set_defaults(func=cmd_decompose)

    e = sub.add_parser("estimate", help="importance-sampling estimate from a checkpoint")
    e.add_argument("checkpoint")
    e.add_argument("--state", help="state JSON {n, amplitudes: [[re, im], ...]}")
    e.add_argument("--config", help="benchmark config; rebuilds its input state")
    e.add_argument("--operator", help="operator JSON for the exact reference value")
    e.add_argument("--eps2", type=float, default=0.05)
    e.add_argument("--delta", type=float, default=0.1)
    e.add_argument("--shots", type=int, help="fixed shot budget instead of the (eps2, delta) rule")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--repetitions", type=int, default=1)
    e.add_argument("--out", help="report JSON path (default stdout)")
    e.add_argument("--csv", help="append one row per repetition to this CSV")
    e.set_defaults(func=cmd_estimate)

    b = sub.add_parser("bound", help="sample-complexity floor for the ansatz")
    b.add_argument("input", help="operator JSON (.json) or Pauli-sum text file")
    b.add_argument("--n", type=int)
    b.add_argument("--L", type=int, default=1)
    b.add_argument("--epsilon", type=float, default=0.1)
    b.add_argument("--restarts", type=int, help="ascent restarts (default 16)")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--optimizer-json", help="optimizer settings as a JSON file or inline JSON")
    b.add_argument("--out", help="report path (default stdout)")
    b.set_defaults(func=cmd_bound)

    c = sub.add_parser("bench", help="run a benchmark config end to end")
    c.add_argument("config")
    c.add_argument("--out-dir", default="runs", help="root for <digest>/ output directories")
    c.add_argument("--fresh", action="store_true", help="ignore an existing checkpoint")
    c.set_defaults(func=cmd_bench)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = list(argv) if argv is not None else sys.argv[1:]
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"obsdecomp: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print("obsdecomp: invalid config:", file=sys.stderr)
        for problem in exc.problems:
            print(f"  {problem}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, OSError, KeyError) as exc:
        print(f"obsdecomp: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

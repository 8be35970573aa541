"""Sample-complexity floor versus ansatz depth for one observable.

Prints delta(H0) and the floor T for each depth; with a random dense
Hamiltonian the floor should drop as the circuit family grows.
"""
import argparse
import json
import sys

import numpy as np

from obsdecomp.bound import lower_bound
from obsdecomp.circuit import AnsatzSpec
from obsdecomp.decompose import OptimizerConfig
from obsdecomp.workloads import SparseHamiltonianSpec, gen_sparse_hamiltonian


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--depths", type=int, nargs="+", default=[0, 1, 2, 3])
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--restarts", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    dim = 1 << args.n
    H = gen_sparse_hamiltonian(SparseHamiltonianSpec(args.n, dim * dim, 1.0, args.seed))
    for L in args.depths:
        rep = lower_bound(H, AnsatzSpec(args.n, L), args.epsilon,
                          OptimizerConfig(restarts=args.restarts, rng_seed=args.seed))
        print(json.dumps({"L": L, "delta_h0": rep.delta_h0,
                          "lower_bound_T": rep.lower_bound_T,
                          "trace_h0_sq": rep.trace_h0_sq}), flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Estimate observables with shallow parameterised circuits.

The target operator is greedily decomposed into terms ``U(theta)^H diag(lam)
U(theta)`` that the brick ansatz can measure directly; expectation values
are then estimated by importance sampling over those terms.
"""
from .bound import BoundReport, delta_h0, lower_bound, traceless_part
from .circuit import (AnsatzSpec, apply_circuit_to_matrix, apply_circuit_to_state,
                      build_unitary, single_qubit_gate, two_qubit_gate)
from .decompose import (Decomposition, DecompTerm, OptimizerConfig, fd_gradient,
                        greedy_decompose, offdiag_cost, optimize_theta, reconstruct)
from .estimate import (EstimateReport, SamplingPlan, draw_sample, estimate, make_plan,
                       median_of_means, required_shots)

__all__ = [
    "AnsatzSpec", "BoundReport", "Decomposition", "DecompTerm", "EstimateReport",
    "OptimizerConfig", "SamplingPlan", "apply_circuit_to_matrix", "apply_circuit_to_state",
    "build_unitary", "delta_h0", "draw_sample", "estimate", "fd_gradient",
    "greedy_decompose", "lower_bound", "make_plan", "median_of_means", "offdiag_cost",
    "optimize_theta", "reconstruct", "required_shots", "single_qubit_gate",
    "traceless_part", "two_qubit_gate",
]

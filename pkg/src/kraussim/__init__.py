"""Markovian open-quantum-system simulation via time-perturbative Kraus series.

Modules
-------
matkernel   dense complex linear-algebra kernels and state containers
lindblad    model definition, condition checks, exact and product-formula oracles
kraus       series construction (general, reduced, factored) and application
circuits    gate-level realization, statevector emulation, shots and tomography
mitigation  Pauli/depolarizing channel fitting, inversion, twirling, projection
models      benchmark system constructors and the named registry
analysis    quadratures, real-space densities, Wigner fields, oscillator fits
cli         batch experiment runner
"""

from .matkernel import (
    DensityMatrix,
    QuantumState,
    fidelity,
    herm_eig,
    matexp,
    pinv,
    psd_sqrt,
    trace_distance,
    von_neumann_entropy,
)
from .lindblad import (
    ConditionReport,
    LindbladModel,
    build_superoperator,
    check_conditions,
    exact_evolve,
    normalize_lindblads,
    trotter_evolve,
)
from .kraus import (
    GroupStructure,
    KrausSeries,
    KrausTerm,
    apply_factored_evolution,
    apply_series,
    build_factored_evolution,
    build_reduced_series,
    build_tp_series,
    detect_group_structure,
    effective_evolution,
    effective_hamiltonian,
    f_of_t,
    gen_hyperbolic,
)

__all__ = [
    "ConditionReport",
    "DensityMatrix",
    "GroupStructure",
    "KrausSeries",
    "KrausTerm",
    "LindbladModel",
    "QuantumState",
    "apply_factored_evolution",
    "apply_series",
    "build_factored_evolution",
    "build_reduced_series",
    "build_superoperator",
    "build_tp_series",
    "check_conditions",
    "detect_group_structure",
    "effective_evolution",
    "effective_hamiltonian",
    "exact_evolve",
    "f_of_t",
    "fidelity",
    "gen_hyperbolic",
    "herm_eig",
    "matexp",
    "normalize_lindblads",
    "pinv",
    "psd_sqrt",
    "trace_distance",
    "trotter_evolve",
    "von_neumann_entropy",
]

__version__ = "0.1.0"

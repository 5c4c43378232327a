"""Flight-gate assignment as a diagonal qubit Hamiltonian, solved with a simulated CVaR-VQE."""

from .encoding import (
    BinaryEncoding,
    EnergyTable,
    PauliZPolynomial,
    QuboProblem,
    build_binary_hamiltonian,
    build_one_hot_hamiltonian,
    build_qubo,
    decode_bits,
    decode_index,
    decode_one_hot,
    default_penalties,
    diagonal_energies,
    encode,
    ground_bitstrings,
    qubo_to_ising,
    qubo_value,
)
from .harness import (
    RunRecord,
    SummaryRow,
    SweepConfig,
    average_evals_to_threshold,
    export_report,
    fraction_reaching,
    preset_encoding_comparison,
    preset_four_gates,
    preset_main,
    run_sweep,
)
from .instance import (
    FlightGateInstance,
    GenerationConfig,
    difficulty_filter,
    feasible_ratio,
    forbidden_pairs,
    generate_instance,
    is_feasible,
    solve_exact,
    travel_time,
)
from .optimizer import OptimizerConfig, OptimizeResult, minimize
from .simulator import AnsatzSpec, fidelity, param_count, prepare_state, probabilities, sample_bitstrings
from .vqe import CostSpec, RunTrace, cvar_exact, cvar_from_samples, expectation, random_initial_params, run_vqe

__version__ = "0.1.0"

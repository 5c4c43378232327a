"""One CVaR-VQE run per tail fraction on the same instance and starting point."""

from fgavqe import (
    AnsatzSpec,
    CostSpec,
    GenerationConfig,
    OptimizerConfig,
    diagonal_energies,
    encode,
    generate_instance,
    ground_bitstrings,
    run_vqe,
)

inst = generate_instance(GenerationConfig(5, 3), seed=3)
table = diagonal_energies(encode(inst, "binary"))
_, ground = ground_bitstrings(table)
n = table.num_qubits
spec = AnsatzSpec(n, layers=3)
print(f"{n} qubits, {len(ground)} degenerate ground states, budget {50 * n} evaluations")

for xi in (0.01, 0.1, 0.25, 1.0):
    trace = run_vqe(table, ground, spec, CostSpec(xi), OptimizerConfig(max_evals=50 * n), seed=11)
    hit = trace.first_eval_to_threshold
    print(f"xi={xi:<5} evals {trace.total_evals:4d}  first F>=0.01 at {hit[0.01]}, "
          f"F>=0.1 at {hit[0.1]}, final fidelity {trace.final_fidelity:.3f}")

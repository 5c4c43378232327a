"""Prepare ansatz states and show how CVaR moves with the tail fraction."""

import numpy as np

from fgavqe import (
    AnsatzSpec,
    GenerationConfig,
    cvar_exact,
    cvar_from_samples,
    diagonal_energies,
    encode,
    expectation,
    generate_instance,
    param_count,
    prepare_state,
    probabilities,
    sample_bitstrings,
)

rng = np.random.default_rng(0)
inst = generate_instance(GenerationConfig(3, 3), seed=2)
table = diagonal_energies(encode(inst, "binary"))
n = table.num_qubits

for family in ("entangling", "product"):
    spec = AnsatzSpec(n, layers=2, family=family)
    theta = rng.uniform(0, 2 * np.pi, param_count(spec))
    psi = prepare_state(spec, theta)
    p = probabilities(psi)
    print(f"{family}: {param_count(spec)} angles, norm {np.linalg.norm(psi):.12f}")
    print(f"  <H> = {expectation(p, table):.2f}")
    for xi in (0.01, 0.1, 0.25, 1.0):
        print(f"  CVaR_{xi:<4} exact {cvar_exact(p, table, xi):10.2f}", end="")
        shots = sample_bitstrings(psi, 1024, seed=1)
        print(f"   from 1024 shots {cvar_from_samples(table.energies[shots], xi):10.2f}")

"""Generate a small instance, solve it exactly and compare the two encodings."""

import numpy as np

from fgavqe import (
    BinaryEncoding,
    GenerationConfig,
    decode_index,
    decode_one_hot,
    diagonal_energies,
    encode,
    feasible_ratio,
    forbidden_pairs,
    generate_instance,
    ground_bitstrings,
    solve_exact,
)

inst = generate_instance(GenerationConfig(num_flights=4, num_gates=3), seed=1)
print("arrivals  ", inst.n_arr.tolist())
print("departures", inst.n_dep.tolist())
print("windows   ", list(zip(inst.t_in.tolist(), inst.t_out.tolist())))
print("forbidden pairs", sorted(forbidden_pairs(inst)))

t_opt, optima = solve_exact(inst)
print(f"optimal travel time {t_opt:g} reached by {sorted(optima)}")

for scheme in ("one_hot", "binary"):
    h = encode(inst, scheme)
    table = diagonal_energies(h)
    e0, ground = ground_bitstrings(table)
    print(f"\n{scheme}: {h.num_qubits} qubits, {len(h.terms)} Pauli-Z terms")
    print(f"  feasible fraction of basis states {feasible_ratio(inst, scheme):.4f}")
    print(f"  ground energy {e0:g}, degeneracy {len(ground)}")
    if scheme == "binary":
        enc = BinaryEncoding(inst.num_flights, inst.num_gates)
        decoded = {decode_index(int(z), enc) for z in ground}
    else:
        decoded = {decode_one_hot(int(z), inst.num_flights, inst.num_gates) for z in ground}
    print(f"  ground states decode to {sorted(decoded)}")

# spectrum: how far is the first excited level from the ground?
levels = np.unique(np.round(diagonal_energies(encode(inst, "binary")).energies, 9))
print("\nlowest binary levels", levels[:5].tolist())

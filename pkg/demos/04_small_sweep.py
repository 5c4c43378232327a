"""A miniature sweep written to disk, resumed, and exported as CSV."""

import sys
import tempfile
from pathlib import Path

from fgavqe import SweepConfig, average_evals_to_threshold, export_report, run_sweep

config = SweepConfig(
    sizes=((2, 3), (3, 3), (4, 3)),
    instances_per_size=4,
    restarts_per_instance=2,
    xis=(0.1, 1.0),
    layer_counts=(3,),
    base_seed=5,
)
out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="fgavqe_"))

records = run_sweep(config, out)
# a second call finds every run in records.jsonl and does no work
assert run_sweep(config, out) == records
paths = export_report(records, out, config)

for xi in config.xis:
    for row in average_evals_to_threshold([r for r in records if r.xi == xi], 0.1):
        print(f"xi={xi:<4} {row['n_qubits']:2d} qubits: {row['successes']}/{row['runs']} runs reached "
              f"F>=0.1, mean evaluations {row['n_bar']}")
print("wrote", *sorted(p.name for p in paths.values()), "to", out)

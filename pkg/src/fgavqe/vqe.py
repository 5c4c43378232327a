"""CVaR cost functions and the single-run VQE loop."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .encoding import EnergyTable
from .optimizer import OptimizerConfig, minimize
from .simulator import AnsatzSpec, fidelity, param_count, prepare_state, probabilities, sample_bitstrings

THRESHOLDS = (0.01, 0.10)
EVALS_PER_QUBIT = 50


@dataclass(frozen=True)
class CostSpec:
    xi: float = 1.0
    mode: str = "exact"
    shots: int = 1024

    def __post_init__(self):
        if not 0.0 < self.xi <= 1.0:
            raise ValueError(f"xi must lie in (0, 1], got {self.xi}")
        if self.mode not in ("exact", "sampled"):
            raise ValueError(f"unknown cost mode {self.mode!r}")
        if self.mode == "sampled" and self.shots < 1:
            raise ValueError("sampled mode needs at least one shot")


def _check_xi(xi: float) -> None:
    if not 0.0 < xi <= 1.0:
        raise ValueError(f"xi must lie in (0, 1], got {xi}")


def cvar_from_samples(energies, xi: float) -> float:
    """Mean of the lowest ``ceil(xi * K)`` of ``K`` sampled energies."""
    _check_xi(xi)
    e = np.sort(np.asarray(energies, dtype=float))
    if e.size == 0:
        raise ValueError("no samples")
    # guard against xi*K landing a hair above an integer
    k = max(1, math.ceil(round(xi * e.size, 9)))
    return float(e[:k].mean())


class SortedTable:
    """Energy table with its ascending order precomputed for repeated CVaR calls."""

    def __init__(self, table: EnergyTable):
        e = np.asarray(table.energies, dtype=float)
        self.energies = e
        self.order = np.argsort(e, kind="stable")
        self.sorted_energies = e[self.order]

    def cvar(self, probs: np.ndarray, xi: float) -> float:
        _check_xi(xi)
        p = probs[self.order]
        cum = np.cumsum(p)
        # first index where the cumulative mass reaches xi
        k = int(np.searchsorted(cum, xi, side="left"))
        k = min(k, len(p) - 1)
        head = float(p[:k] @ self.sorted_energies[:k])
        below = float(cum[k - 1]) if k else 0.0
        rest = xi - below
        return (head + rest * float(self.sorted_energies[k])) / xi


def cvar_exact(probs, table: EnergyTable | SortedTable, xi: float) -> float:
    """Lower ``xi``-tail expectation of the energy under ``probs``.

    States are taken in ascending energy order (index order on ties); the
    boundary state contributes only the probability needed to reach ``xi``.
    """
    probs = np.asarray(probs, dtype=float)
    if abs(probs.sum() - 1.0) > 1e-9:
        raise ValueError("probabilities must sum to 1")
    st = table if isinstance(table, SortedTable) else SortedTable(table)
    return st.cvar(probs, xi)


def expectation(probs, table: EnergyTable) -> float:
    return float(np.asarray(probs, dtype=float) @ table.energies)


def random_initial_params(spec: AnsatzSpec, seed) -> np.ndarray:
    """I.i.d. uniform angles on [0, 2*pi)."""
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, 2.0 * np.pi, size=param_count(spec))


def default_max_evals(num_qubits: int) -> int:
    return EVALS_PER_QUBIT * num_qubits


@dataclass
class EvalRecord:
    index: int
    theta_hash: str
    cost: float
    fidelity: float


@dataclass
class RunTrace:
    evals: list[EvalRecord] = field(default_factory=list)
    first_eval_to_threshold: dict[float, int | None] = field(default_factory=dict)
    best_cost: float = math.inf
    best_theta: np.ndarray | None = None
    final_fidelity: float = 0.0
    max_fidelity: float = 0.0

    @property
    def total_evals(self) -> int:
        return len(self.evals)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["eval", "cost", "fidelity"])
        for r in self.evals:
            w.writerow([r.index, repr(r.cost), repr(r.fidelity)])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "first_eval_to_threshold": {str(t): v for t, v in self.first_eval_to_threshold.items()},
            "best_cost": self.best_cost,
            "final_fidelity": self.final_fidelity,
            "max_fidelity": self.max_fidelity,
            "total_evals": self.total_evals,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2)


def _theta_hash(theta: np.ndarray) -> str:
    return hashlib.sha1(np.ascontiguousarray(theta, dtype=float).tobytes()).hexdigest()[:12]


def run_vqe(
    table: EnergyTable,
    ground_set,
    spec: AnsatzSpec,
    cost: CostSpec,
    opt: OptimizerConfig | None = None,
    seed=None,
    thresholds=THRESHOLDS,
) -> RunTrace:
    """One CVaR-VQE optimisation with fidelity tracked at every evaluation.

    The initial angles come from ``seed``; in sampled mode the shot stream is
    seeded from the same value. ``first_eval_to_threshold`` holds the 1-based
    evaluation count at which the fidelity first reached each threshold.
    """
    if table.num_qubits != spec.num_qubits:
        raise ValueError(
            f"table has {table.num_qubits} qubits but the ansatz has {spec.num_qubits}"
        )
    if opt is None:
        opt = OptimizerConfig(max_evals=default_max_evals(spec.num_qubits))
    ground = np.asarray(sorted(ground_set), dtype=np.int64)
    if ground.size == 0:
        raise ValueError("ground set is empty")
    st = SortedTable(table)
    shot_rng = np.random.default_rng([1, seed if seed is not None else 0])
    trace = RunTrace(first_eval_to_threshold={t: None for t in thresholds})

    def cost_fn(theta: np.ndarray) -> float:
        psi = prepare_state(spec, theta)
        probs = probabilities(psi)
        if cost.mode == "exact":
            c = st.cvar(probs, cost.xi)
        else:
            shots = sample_bitstrings(psi, cost.shots, shot_rng)
            c = cvar_from_samples(st.energies[shots], cost.xi)
        f = float(probs[ground].sum())
        k = len(trace.evals) + 1
        trace.evals.append(EvalRecord(k, _theta_hash(theta), c, f))
        for t in thresholds:
            if trace.first_eval_to_threshold[t] is None and f >= t:
                trace.first_eval_to_threshold[t] = k
        return c

    theta0 = random_initial_params(spec, seed)
    res = minimize(cost_fn, theta0, opt)
    trace.best_cost = res.fun
    trace.best_theta = res.x
    trace.final_fidelity = fidelity(prepare_state(spec, res.x), ground)
    trace.max_fidelity = max(r.fidelity for r in trace.evals)
    return trace

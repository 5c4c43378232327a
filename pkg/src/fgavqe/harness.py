"""Parameter sweeps over instances, encodings and ansatz settings, plus reporting.

Every run is fully determined by the sweep's base seed:

* pool instance ``k`` of size ``(F, G)`` is drawn with seed
  ``SeedSequence([base_seed, 0, F, G, k])``;
* restart ``r`` of the instance with pool index ``k`` starts from angles drawn
  with seed ``SeedSequence([base_seed, 1, F, G, k, r])``.

The run seed deliberately ignores xi, layers, family and encoding, so those
variants start from the same random angles (common random numbers).
Records are written one JSON line at a time to ``records.jsonl`` and a sweep
pointed at an existing directory skips the runs already on disk.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .encoding import diagonal_energies, encode, ground_bitstrings
from .instance import (
    FlightGateInstance,
    GenerationConfig,
    difficulty_filter,
    generate_instance,
    num_qubits,
    solve_exact,
)
from .optimizer import OptimizerConfig
from .simulator import AnsatzSpec
from .vqe import CostSpec, run_vqe

log = logging.getLogger(__name__)

RECORDS_FILE = "records.jsonl"
DEFAULT_GRID = tuple(np.round(np.arange(0, 50.5, 0.5), 1).tolist())


@dataclass(frozen=True)
class SweepConfig:
    sizes: tuple[tuple[int, int], ...]
    instances_per_size: int = 50
    restarts_per_instance: int = 5
    xis: tuple[float, ...] = (0.01, 0.1, 0.25, 1.0)
    layer_counts: tuple[int, ...] = (1, 2, 3)
    families: tuple[str, ...] = ("entangling",)
    encodings: tuple[str, ...] = ("binary",)
    generation: dict = field(default_factory=dict)
    base_seed: int = 0
    thresholds: tuple[float, ...] = (0.01, 0.10)
    mode: str = "exact"
    shots: int = 1024
    evals_per_qubit: int = 50
    rho_begin: float = 0.5
    rho_end: float = 1e-4
    max_qubits: int = 24

    def __post_init__(self):
        norm = {
            "sizes": tuple(tuple(int(v) for v in s) for s in self.sizes),
            "xis": tuple(float(x) for x in self.xis),
            "layer_counts": tuple(int(v) for v in self.layer_counts),
            "families": tuple(self.families),
            "encodings": tuple(self.encodings),
            "thresholds": tuple(float(t) for t in self.thresholds),
            "generation": dict(self.generation),
        }
        for k, v in norm.items():
            object.__setattr__(self, k, v)
        for name in ("sizes", "xis", "layer_counts", "families", "encodings", "thresholds"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be nonempty")
        if self.instances_per_size < 1 or self.restarts_per_instance < 1:
            raise ValueError("need at least one instance and one restart")
        for enc in self.encodings:
            if enc not in ("one_hot", "binary"):
                raise ValueError(f"unknown encoding {enc!r}")
            for F, G in self.sizes:
                n = num_qubits(F, G, enc)
                if n > self.max_qubits:
                    raise ValueError(f"size ({F}, {G}) needs {n} qubits in {enc}, cap is {self.max_qubits}")
        for F, G in self.sizes:
            GenerationConfig(F, G, **self.generation)
        for xi in self.xis:
            CostSpec(xi, self.mode, self.shots)
        for fam in self.families:
            AnsatzSpec(1, 1, fam)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["sizes"] = [list(s) for s in self.sizes]
        for k in ("xis", "layer_counts", "families", "encodings", "thresholds"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        if "config" in data and "sizes" not in data:
            data = data["config"]  # a manifest
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown sweep config keys: {sorted(unknown)}")
        return cls(**data)

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def generation_config(self, F: int, G: int) -> GenerationConfig:
        return GenerationConfig(F, G, **self.generation)


@dataclass
class RunRecord:
    instance_id: str
    num_flights: int
    num_gates: int
    encoding: str
    n_qubits: int
    family: str
    layers: int
    xi: float
    restart: int
    seed: int
    evals_used: int
    first_eval: dict[float, int | None]
    final_fidelity: float
    max_fidelity: float
    best_cost: float
    optimal_time: float
    ground_degeneracy: int
    error: str = ""

    def key(self) -> tuple:
        return (self.num_flights * self.num_gates, self.num_flights, self.num_gates,
                self.instance_id, self.encoding, self.family, self.layers, self.xi, self.restart)

    def reached(self, threshold: float) -> bool:
        return self.first_eval.get(threshold) is not None

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["first_eval"] = {repr(t): v for t, v in sorted(self.first_eval.items())}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        d = dict(d)
        d["first_eval"] = {float(t): v for t, v in d["first_eval"].items()}
        return cls(**d)


@dataclass
class SummaryRow:
    num_flights: int
    num_gates: int
    encoding: str
    n_qubits: int
    family: str
    layers: int
    xi: float
    runs: int
    successes: dict[float, int]
    fraction: dict[float, float]
    n_bar: dict[float, float | None]


# ---------------------------------------------------------------------------
# sweep execution

def _seed(*words: int) -> int:
    return int(np.random.SeedSequence([int(w) for w in words]).generate_state(1, np.uint32)[0])


def instance_seed(base_seed: int, F: int, G: int, pool_index: int) -> int:
    return _seed(base_seed, 0, F, G, pool_index)


def run_seed(base_seed: int, F: int, G: int, pool_index: int, restart: int) -> int:
    return _seed(base_seed, 1, F, G, pool_index, restart)


def size_instances(config: SweepConfig, F: int, G: int) -> list[tuple[int, FlightGateInstance]]:
    """``(pool_index, instance)`` pairs for one size, hardest first when filtered."""
    gen = config.generation_config(F, G)
    pool_size = config.instances_per_size * gen.difficulty_pool_factor
    pool = [generate_instance(gen, instance_seed(config.base_seed, F, G, k)) for k in range(pool_size)]
    if gen.difficulty_pool_factor == 1:
        return list(enumerate(pool))
    index = {id(inst): k for k, inst in enumerate(pool)}
    kept = difficulty_filter(pool, config.instances_per_size)
    return [(index[id(inst)], inst) for inst in kept]


@dataclass(frozen=True)
class _Job:
    instance_json: str
    instance_id: str
    pool_index: int
    encoding: str
    family: str
    layers: int
    xi: float
    restart: int
    seed: int
    mode: str
    shots: int
    max_evals: int
    rho_begin: float
    rho_end: float
    thresholds: tuple[float, ...]


@lru_cache(maxsize=8)
def _prepared(instance_json: str, encoding: str):
    inst = FlightGateInstance.from_json(instance_json)
    opt_time, optima = solve_exact(inst)
    table = diagonal_energies(encode(inst, encoding))
    _, ground = ground_bitstrings(table)
    return inst, opt_time, optima, table, ground


def _execute(job: _Job) -> RunRecord:
    inst = FlightGateInstance.from_json(job.instance_json)
    n = num_qubits(inst, scheme=job.encoding)
    base = dict(
        instance_id=job.instance_id, num_flights=inst.num_flights, num_gates=inst.num_gates,
        encoding=job.encoding, n_qubits=n, family=job.family, layers=job.layers, xi=job.xi,
        restart=job.restart, seed=job.seed,
    )
    try:
        _, opt_time, _, table, ground = _prepared(job.instance_json, job.encoding)
        trace = run_vqe(
            table, ground, AnsatzSpec(n, job.layers, job.family),
            CostSpec(job.xi, job.mode, job.shots),
            OptimizerConfig(job.max_evals, job.rho_begin, job.rho_end),
            seed=job.seed, thresholds=job.thresholds,
        )
    except Exception as exc:  # recorded per run, the sweep carries on
        log.warning("run %s failed: %s", base, exc)
        return RunRecord(**base, evals_used=0, first_eval={t: None for t in job.thresholds},
                         final_fidelity=0.0, max_fidelity=0.0, best_cost=float("nan"),
                         optimal_time=float("nan"), ground_degeneracy=0,
                         error=f"{type(exc).__name__}: {exc}")
    return RunRecord(
        **base,
        evals_used=trace.total_evals,
        first_eval=dict(trace.first_eval_to_threshold),
        final_fidelity=trace.final_fidelity,
        max_fidelity=trace.max_fidelity,
        best_cost=trace.best_cost,
        optimal_time=opt_time,
        ground_degeneracy=int(len(ground)),
    )


def plan_jobs(config: SweepConfig) -> list[_Job]:
    jobs = []
    for F, G in config.sizes:
        for pool_index, inst in size_instances(config, F, G):
            blob = inst.to_json()
            iid = f"F{F}G{G}-{pool_index:04d}"
            for enc in config.encodings:
                n = num_qubits(F, G, enc)
                for fam in config.families:
                    for layers in config.layer_counts:
                        for xi in config.xis:
                            for r in range(config.restarts_per_instance):
                                jobs.append(_Job(
                                    blob, iid, pool_index, enc, fam, layers, xi, r,
                                    run_seed(config.base_seed, F, G, pool_index, r),
                                    config.mode, config.shots, config.evals_per_qubit * n,
                                    config.rho_begin, config.rho_end, config.thresholds,
                                ))
    return jobs


def _job_key(job: _Job) -> tuple:
    return (job.instance_id, job.encoding, job.family, job.layers, job.xi, job.restart)


def _record_key(rec: RunRecord) -> tuple:
    return (rec.instance_id, rec.encoding, rec.family, rec.layers, rec.xi, rec.restart)


def load_records(path: str | os.PathLike) -> list[RunRecord]:
    """Records from a sweep directory (or a ``records.jsonl`` file), sorted by key."""
    p = Path(path)
    if p.is_dir():
        p = p / RECORDS_FILE
    if not p.exists():
        return []
    out = []
    with open(p) as fh:
        for line in fh:
            line = line.strip()
            if line:
                try:
                    out.append(RunRecord.from_dict(json.loads(line)))
                except json.JSONDecodeError:
                    # a line cut short by an interruption; it will be rerun
                    continue
    return sorted(out, key=RunRecord.key)


def run_sweep(config: SweepConfig, out_dir: str | os.PathLike | None = None,
              workers: int = 1, progress: bool = False) -> list[RunRecord]:
    """Run every (size, instance, encoding, family, layers, xi, restart) combination.

    With ``out_dir`` the config is saved to ``config.json``, each finished run
    is appended to ``records.jsonl`` and runs already present there are not
    repeated. Returns all records sorted by key.
    """
    jobs = plan_jobs(config)
    done: dict[tuple, RunRecord] = {}
    sink = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        cfg_path = out / "config.json"
        if cfg_path.exists():
            saved = SweepConfig.from_dict(json.loads(cfg_path.read_text()))
            if saved.hash() != config.hash():
                raise ValueError(f"{out} holds records of a different sweep config")
        else:
            cfg_path.write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")
        for rec in load_records(out):
            done[_record_key(rec)] = rec
        _drop_partial_tail(out / RECORDS_FILE)
        sink = open(out / RECORDS_FILE, "a")
    todo = [j for j in jobs if _job_key(j) not in done]
    log.info("sweep: %d runs planned, %d already done", len(jobs), len(jobs) - len(todo))
    try:
        results = _map(todo, workers, progress)
        for rec in results:
            done[_record_key(rec)] = rec
            if sink is not None:
                sink.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")
                sink.flush()
    finally:
        if sink is not None:
            sink.close()
    wanted = {_job_key(j) for j in jobs}
    return sorted((r for k, r in done.items() if k in wanted), key=RunRecord.key)


def _drop_partial_tail(path: Path) -> None:
    if not path.exists():
        return
    data = path.read_bytes()
    if data and not data.endswith(b"\n"):
        path.write_bytes(data[: data.rfind(b"\n") + 1])


def _map(jobs: Sequence[_Job], workers: int, progress: bool) -> Iterable[RunRecord]:
    if workers <= 1:
        results = map(_execute, jobs)
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        results = pool.map(_execute, jobs, chunksize=8)
    try:
        for k, rec in enumerate(results, 1):
            if progress and (k % 100 == 0 or k == len(jobs)):
                log.info("sweep: %d / %d runs finished", k, len(jobs))
            yield rec
    finally:
        if workers > 1:
            pool.shutdown()


# ---------------------------------------------------------------------------
# aggregation

def _homogeneous(records: Sequence[RunRecord]) -> None:
    if not records:
        raise ValueError("empty record group")
    keys = {(r.encoding, r.family, r.layers, r.xi) for r in records}
    if len(keys) != 1:
        raise ValueError(f"records mix settings: {sorted(keys)}")


def fraction_reaching(records: Sequence[RunRecord], threshold: float,
                      grid: Sequence[float] = DEFAULT_GRID) -> np.ndarray:
    """Fraction of runs whose first crossing happened within ``g * n_qubits`` evaluations."""
    _homogeneous(records)
    first = np.array([
        r.first_eval[threshold] if r.first_eval.get(threshold) is not None else np.inf
        for r in records
    ], dtype=float)
    nq = np.array([r.n_qubits for r in records], dtype=float)
    g = np.asarray(grid, dtype=float)
    return (first[None, :] <= g[:, None] * nq[None, :]).mean(axis=1)


def success_fraction(records: Sequence[RunRecord], threshold: float) -> float:
    if not records:
        raise ValueError("empty record group")
    return sum(r.reached(threshold) for r in records) / len(records)


def average_evals_to_threshold(records: Sequence[RunRecord], threshold: float) -> list[dict]:
    """Mean evaluations-to-first-crossing over successful runs, per setting and qubit count.

    Groups without any success get ``n_bar = None``.
    """
    groups: dict[tuple, list[RunRecord]] = {}
    for r in records:
        groups.setdefault((r.encoding, r.family, r.layers, r.xi, r.n_qubits), []).append(r)
    rows = []
    for (enc, fam, layers, xi, n), recs in sorted(groups.items()):
        hits = [r.first_eval[threshold] for r in recs if r.reached(threshold)]
        rows.append({
            "encoding": enc, "family": fam, "layers": layers, "xi": xi, "n_qubits": n,
            "threshold": threshold, "runs": len(recs), "successes": len(hits),
            "n_bar": float(np.mean(hits)) if hits else None,
        })
    return rows


def summarize(records: Sequence[RunRecord], thresholds: Sequence[float]) -> list[SummaryRow]:
    groups: dict[tuple, list[RunRecord]] = {}
    for r in records:
        key = (r.num_flights * r.num_gates, r.num_flights, r.num_gates, r.encoding,
               r.n_qubits, r.family, r.layers, r.xi)
        groups.setdefault(key, []).append(r)
    rows = []
    for (_, F, G, enc, n, fam, layers, xi), recs in sorted(groups.items()):
        succ, frac, nbar = {}, {}, {}
        for t in thresholds:
            hits = [r.first_eval[t] for r in recs if r.reached(t)]
            succ[t] = len(hits)
            frac[t] = len(hits) / len(recs)
            nbar[t] = float(np.mean(hits)) if hits else None
        rows.append(SummaryRow(F, G, enc, n, fam, layers, xi, len(recs), succ, frac, nbar))
    return rows


# ---------------------------------------------------------------------------
# presets

def _capped(sizes, encodings, max_qubits):
    return tuple(s for s in sizes if all(num_qubits(*s, e) <= max_qubits for e in encodings))


def preset_main(max_qubits: int = 18) -> SweepConfig:
    """Binary-encoding study: xi and layer scans, entangling vs product ansatz.

    Three gates on two qubits per flight make the cyclic mapping alias gate 0,
    so ground states are degenerate.
    """
    sizes = tuple((F, 3) for F in range(2, 10))
    return SweepConfig(
        sizes=_capped(sizes, ("binary",), max_qubits),
        families=("entangling", "product"),
        encodings=("binary",),
        generation={"difficulty_pool_factor": 2},
        max_qubits=max_qubits,
    )


ONE_HOT_SIZES = ((3, 2), (4, 2), (5, 2), (4, 3), (7, 2), (4, 4), (6, 3))


def preset_encoding_comparison(max_qubits: int = 18) -> SweepConfig:
    """One-hot versus binary on problem sizes |F||G| = 6 .. 18."""
    return SweepConfig(
        sizes=_capped(ONE_HOT_SIZES, ("one_hot", "binary"), max_qubits),
        families=("entangling", "product"),
        encodings=("one_hot", "binary"),
        generation={"difficulty_pool_factor": 2},
        max_qubits=max_qubits,
    )


def preset_four_gates(max_qubits: int = 18) -> SweepConfig:
    """Four gates, two qubits per flight: no cyclic aliasing, no induced degeneracy."""
    sizes = tuple((F, 4) for F in range(2, 10))
    return SweepConfig(
        sizes=_capped(sizes, ("binary",), max_qubits),
        xis=(0.01, 0.1),
        families=("entangling",),
        encodings=("binary",),
        generation={"difficulty_pool_factor": 2},
        max_qubits=max_qubits,
    )


PRESETS = {
    "main": preset_main,
    "encoding_comparison": preset_encoding_comparison,
    "four_gates": preset_four_gates,
}


# ---------------------------------------------------------------------------
# export

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _thr_tag(t: float) -> str:
    return f"{t:g}"


def export_report(records: Sequence[RunRecord], out_dir: str | os.PathLike,
                  config: SweepConfig | None = None,
                  grid: Sequence[float] = DEFAULT_GRID) -> dict[str, Path]:
    """Write runs, summary, scaling table, fraction curves and a manifest.

    Output depends only on the record set (sorted before writing), so
    re-exporting is byte-for-byte idempotent.
    """
    out = Path(out_dir)
    (out / "curves").mkdir(parents=True, exist_ok=True)
    records = sorted(records, key=RunRecord.key)
    thresholds = tuple(config.thresholds) if config else tuple(
        sorted({t for r in records for t in r.first_eval}) or (0.01, 0.10)
    )
    paths = {}

    paths["runs"] = out / "runs.csv"
    _write_csv(
        paths["runs"],
        ["instance_id", "num_flights", "num_gates", "encoding", "n_qubits", "family", "layers",
         "xi", "restart", "seed", "evals_used"]
        + [f"first_eval_{_thr_tag(t)}" for t in thresholds]
        + ["final_fidelity", "max_fidelity", "best_cost", "optimal_time", "ground_degeneracy", "error"],
        ([r.instance_id, r.num_flights, r.num_gates, r.encoding, r.n_qubits, r.family, r.layers,
          r.xi, r.restart, r.seed, r.evals_used]
         + [r.first_eval.get(t) for t in thresholds]
         + [r.final_fidelity, r.max_fidelity, r.best_cost, r.optimal_time, r.ground_degeneracy, r.error]
         for r in records),
    )

    paths["summary"] = out / "summary.csv"
    summary = summarize(records, thresholds)
    _write_csv(
        paths["summary"],
        ["num_flights", "num_gates", "encoding", "n_qubits", "family", "layers", "xi", "runs"]
        + [f"{k}_{_thr_tag(t)}" for t in thresholds for k in ("successes", "fraction", "n_bar")],
        ([s.num_flights, s.num_gates, s.encoding, s.n_qubits, s.family, s.layers, s.xi, s.runs]
         + [v for t in thresholds for v in (s.successes[t], s.fraction[t], s.n_bar[t])]
         for s in summary),
    )

    paths["scaling"] = out / "scaling.csv"
    scaling = [row for t in thresholds for row in average_evals_to_threshold(records, t)]
    _write_csv(
        paths["scaling"],
        ["encoding", "family", "layers", "xi", "threshold", "n_qubits", "runs", "successes", "n_bar"],
        ([r["encoding"], r["family"], r["layers"], r["xi"], r["threshold"], r["n_qubits"],
          r["runs"], r["successes"], r["n_bar"]] for r in scaling),
    )

    panels: dict[tuple, dict[float, list[RunRecord]]] = {}
    for r in records:
        panels.setdefault((r.encoding, r.family, r.layers), {}).setdefault(r.xi, []).append(r)
    for (enc, fam, layers), by_xi in sorted(panels.items()):
        xis = sorted(by_xi)
        for t in thresholds:
            curves = [fraction_reaching(by_xi[xi], t, grid) for xi in xis]
            name = f"{enc}_{fam}_l{layers}_thr{_thr_tag(t)}"
            paths[f"curve:{name}"] = out / "curves" / f"{name}.csv"
            _write_csv(
                paths[f"curve:{name}"],
                ["normalized_iterations"] + [f"xi={xi:g}" for xi in xis],
                ([float(g)] + [float(c[k]) for c in curves] for k, g in enumerate(grid)),
            )

    runs_digest = hashlib.sha256(paths["runs"].read_bytes()).hexdigest()
    manifest = {
        "config": config.to_dict() if config else None,
        "config_hash": config.hash() if config else None,
        "base_seed": config.base_seed if config else None,
        "instance_seeds": _instance_seed_table(records, config),
        "num_records": len(records),
        "runs_sha256": runs_digest,
    }
    paths["manifest"] = out / "manifest.json"
    paths["manifest"].write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return paths


def _instance_seed_table(records, config) -> dict[str, int] | None:
    if config is None:
        return None
    table = {}
    for r in records:
        if r.instance_id not in table:
            pool_index = int(r.instance_id.rsplit("-", 1)[1])
            table[r.instance_id] = instance_seed(config.base_seed, r.num_flights, r.num_gates, pool_index)
    return dict(sorted(table.items()))


def manifest_config(path: str | os.PathLike) -> SweepConfig:
    data = json.loads(Path(path).read_text())
    return SweepConfig.from_dict(data)

"""Command-line entry point: ``fgavqe {gen,exact,encode,vqe,sweep,report}``.

Instances travel between subcommands as JSON files. Results go to stdout as
JSON; failures exit nonzero with ``{"error": ..., "message": ...}`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .encoding import diagonal_energies, encode, ground_bitstrings
from .harness import PRESETS, SweepConfig, export_report, load_records, run_sweep
from .instance import FlightGateInstance, GenerationConfig, forbidden_pairs, generate_instance, solve_exact
from .optimizer import OptimizerConfig
from .simulator import AnsatzSpec, prepare_state
from .vqe import CostSpec, default_max_evals, run_vqe

MAX_DUMP_QUBITS = 12


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _encoding(name: str) -> str:
    key = name.replace("-", "_").lower()
    if key in ("onehot", "one_hot"):
        return "one_hot"
    if key == "binary":
        return "binary"
    raise argparse.ArgumentTypeError(f"unknown encoding {name!r}")


def _load_instance(path: str) -> FlightGateInstance:
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    return FlightGateInstance.from_json(text)


def _emit(obj, out: str | None = None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_gen(args) -> None:
    cfg = GenerationConfig(
        args.flights, args.gates,
        max_passengers=args.max_passengers, time_horizon=args.horizon,
        min_duration=args.min_duration, max_duration=args.max_duration, t_buf=args.t_buf,
    )
    if args.count == 1:
        _emit(generate_instance(cfg, args.seed).to_dict(), args.out)
        return
    if not args.out:
        raise CliError("--out directory is required with --count > 1")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    names = []
    for k in range(args.count):
        inst = generate_instance(cfg, args.seed + k)
        name = out / f"instance_F{args.flights}_G{args.gates}_s{args.seed + k}.json"
        name.write_text(inst.to_json() + "\n")
        names.append(str(name))
    _emit({"written": names})


def cmd_exact(args) -> None:
    inst = _load_instance(args.instance)
    t, optima = solve_exact(inst)
    _emit({
        "optimal_time": t,
        "optima": sorted(list(a) for a in optima),
        "forbidden_pairs": sorted(list(p) for p in forbidden_pairs(inst)),
    }, args.out)


def cmd_encode(args) -> None:
    inst = _load_instance(args.instance)
    h = encode(inst, args.encoding, args.lam_one, args.lam_not)
    _emit(h.to_dict(), args.out)


def cmd_vqe(args) -> None:
    inst = _load_instance(args.instance)
    h = encode(inst, args.encoding)
    table = diagonal_energies(h)
    _, ground = ground_bitstrings(table)
    n = h.num_qubits
    spec = AnsatzSpec(n, args.layers, args.family)
    opt = OptimizerConfig(
        max_evals=args.max_evals or default_max_evals(n),
        rho_begin=args.rho_begin, rho_end=args.rho_end, seed=args.seed,
    )
    trace = run_vqe(table, ground, spec, CostSpec(args.xi, args.mode, args.shots), opt, seed=args.seed)
    if args.trace_csv:
        Path(args.trace_csv).write_text(trace.to_csv())
    if args.dump_amplitudes:
        if n > MAX_DUMP_QUBITS:
            raise CliError(f"amplitude dump is limited to {MAX_DUMP_QUBITS} qubits, state has {n}")
        psi = np.asarray(prepare_state(spec, trace.best_theta), dtype=complex)
        Path(args.dump_amplitudes).write_text(json.dumps({
            "num_qubits": n,
            "real": psi.real.tolist(),
            "imag": psi.imag.tolist(),
        }) + "\n")
    summary = trace.summary()
    summary.update({
        "encoding": args.encoding,
        "num_qubits": n,
        "ground_degeneracy": int(len(ground)),
        "optimal_time": solve_exact(inst)[0],
        "best_theta": trace.best_theta.tolist(),
    })
    _emit(summary, args.out)


def cmd_sweep(args) -> None:
    if args.preset:
        config = PRESETS[args.preset](max_qubits=args.max_qubits)
    elif args.config:
        config = SweepConfig.from_dict(json.loads(Path(args.config).read_text()))
    else:
        raise CliError("give a config file or --preset")
    if args.print_config:
        _emit(config.to_dict())
        return
    out = Path(args.out)
    records = run_sweep(config, out, workers=args.workers, progress=True)
    paths = export_report(records, out, config)
    errors = sum(1 for r in records if r.error)
    _emit({"records": len(records), "failed_runs": errors, "manifest": str(paths["manifest"])})


def cmd_report(args) -> None:
    src = Path(args.records_dir)
    records = load_records(src)
    if not records and not (src / "records.jsonl").exists():
        raise CliError(f"no records.jsonl in {src}")
    config = None
    cfg_path = src / "config.json"
    if cfg_path.exists():
        config = SweepConfig.from_dict(json.loads(cfg_path.read_text()))
    paths = export_report(records, Path(args.out) if args.out else src, config)
    _emit({"records": len(records), "files": sorted(str(p) for p in paths.values())})


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fgavqe", description="Flight-gate assignment with a simulated CVaR-VQE.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate random instances")
    g.add_argument("--flights", type=int, required=True)
    g.add_argument("--gates", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--max-passengers", type=int, default=20)
    g.add_argument("--horizon", type=int, default=None, help="default: max(180, 90 * flights // gates)")
    g.add_argument("--min-duration", type=int, default=30)
    g.add_argument("--max-duration", type=int, default=90)
    g.add_argument("--t-buf", type=int, default=15)
    g.add_argument("--out", help="file (count 1) or directory")
    g.set_defaults(func=cmd_gen)

    e = sub.add_parser("exact", help="brute-force optimum of an instance")
    e.add_argument("instance", help="instance JSON, '-' for stdin")
    e.add_argument("--out")
    e.set_defaults(func=cmd_exact)

    h = sub.add_parser("encode", help="emit the Pauli-Z Hamiltonian as JSON")
    h.add_argument("instance")
    h.add_argument("--encoding", type=_encoding, default="binary")
    h.add_argument("--lam-one", type=float)
    h.add_argument("--lam-not", type=float)
    h.add_argument("--out")
    h.set_defaults(func=cmd_encode)

    v = sub.add_parser("vqe", help="single CVaR-VQE run")
    v.add_argument("instance")
    v.add_argument("--encoding", type=_encoding, default="binary")
    v.add_argument("--xi", type=float, default=0.1)
    v.add_argument("--layers", type=int, default=3)
    v.add_argument("--family", choices=("entangling", "product"), default="entangling")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--max-evals", type=int, default=None, help="default: 50 per qubit")
    v.add_argument("--mode", choices=("exact", "sampled"), default="exact")
    v.add_argument("--shots", type=int, default=1024)
    v.add_argument("--rho-begin", type=float, default=0.5)
    v.add_argument("--rho-end", type=float, default=1e-4)
    v.add_argument("--trace-csv", help="write eval,cost,fidelity history here")
    v.add_argument("--dump-amplitudes", help=f"write final amplitudes as JSON (<= {MAX_DUMP_QUBITS} qubits)")
    v.add_argument("--out")
    v.set_defaults(func=cmd_vqe)

    s = sub.add_parser("sweep", help="run a parameter sweep and export its report")
    s.add_argument("config", nargs="?", help="sweep config or manifest JSON")
    s.add_argument("--preset", choices=sorted(PRESETS))
    s.add_argument("--max-qubits", type=int, default=18, help="qubit cap for presets")
    s.add_argument("--out", default="sweep_out")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--print-config", action="store_true", help="print the resolved config and exit")
    s.set_defaults(func=cmd_sweep)

    r = sub.add_parser("report", help="export CSV report from a sweep directory")
    r.add_argument("records_dir")
    r.add_argument("--out", help="default: the records directory")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        args.func(args)
    except Exception as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 2
    return 0

"""Flight-gate assignment problem data, generation and exact solution.

An assignment is a tuple ``a`` of gate indices, ``a[i]`` being the gate of
flight ``i``. Every flight gets exactly one gate by construction, so the only
constraint left to check is the forbidden-pair one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

Assignment = tuple[int, ...]

MAX_ENUMERATION = 10**8
MAX_RATIO_QUBITS = 28
_CHUNK = 1 << 18


class InfeasibleInstanceError(ValueError):
    """No assignment satisfies the forbidden-pair constraint."""


class GenerationError(RuntimeError):
    """The generator could not produce a valid instance within its retry cap."""


def _frozen_int_array(values, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=np.int64)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FlightGateInstance:
    """Problem data. All times are in minutes, all values integers."""

    num_flights: int
    num_gates: int
    n_arr: np.ndarray
    n_dep: np.ndarray
    n_trans: np.ndarray
    t_arr: np.ndarray
    t_dep: np.ndarray
    t_gate: np.ndarray
    t_in: np.ndarray
    t_out: np.ndarray
    t_buf: int

    def __post_init__(self):
        F, G = int(self.num_flights), int(self.num_gates)
        if F < 1 or G < 1:
            raise ValueError("need at least one flight and one gate")
        object.__setattr__(self, "num_flights", F)
        object.__setattr__(self, "num_gates", G)
        object.__setattr__(self, "t_buf", int(self.t_buf))
        shapes = {
            "n_arr": (1, (F,)),
            "n_dep": (1, (F,)),
            "n_trans": (2, (F, F)),
            "t_arr": (1, (G,)),
            "t_dep": (1, (G,)),
            "t_gate": (2, (G, G)),
            "t_in": (1, (F,)),
            "t_out": (1, (F,)),
        }
        for name, (ndim, shape) in shapes.items():
            arr = _frozen_int_array(getattr(self, name), ndim)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            if name != "t_in" and name != "t_out" and (arr < 0).any():
                raise ValueError(f"{name} must be nonnegative")
            object.__setattr__(self, name, arr)
        if self.t_buf < 0:
            raise ValueError("t_buf must be nonnegative")
        if (self.t_in < 0).any() or (self.t_out < 0).any():
            raise ValueError("flight times must be nonnegative")
        if not (self.t_in < self.t_out).all():
            raise ValueError("every flight needs t_in < t_out")
        if (np.diag(self.n_trans) != 0).any():
            raise ValueError("n_trans must have a zero diagonal")
        if (self.t_gate != self.t_gate.T).any() or (np.diag(self.t_gate) != 0).any():
            raise ValueError("t_gate must be symmetric with a zero diagonal")

    def __eq__(self, other):
        if not isinstance(other, FlightGateInstance):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(self.to_json())

    def to_dict(self) -> dict:
        out = {"num_flights": self.num_flights, "num_gates": self.num_gates}
        for name in ("n_arr", "n_dep", "n_trans", "t_arr", "t_dep", "t_gate", "t_in", "t_out"):
            out[name] = getattr(self, name).tolist()
        out["t_buf"] = self.t_buf
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False, separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict) -> "FlightGateInstance":
        for key, value in data.items():
            _check_integral(key, value)
        return cls(**{k: data[k] for k in _INSTANCE_KEYS})

    @classmethod
    def from_json(cls, text: str) -> "FlightGateInstance":
        return cls.from_dict(json.loads(text))

    def linear_costs(self) -> np.ndarray:
        """(|F|, |G|) matrix of arrival plus departure walking time per flight and gate."""
        return (np.outer(self.n_arr, self.t_arr) + np.outer(self.n_dep, self.t_dep)).astype(float)


_INSTANCE_KEYS = (
    "num_flights", "num_gates", "n_arr", "n_dep", "n_trans",
    "t_arr", "t_dep", "t_gate", "t_in", "t_out", "t_buf",
)


def _check_integral(key, value):
    if isinstance(value, list):
        for v in value:
            _check_integral(key, v)
    elif isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"instance field {key!r} must contain integers only")


@dataclass(frozen=True)
class GenerationConfig:
    num_flights: int
    num_gates: int
    max_passengers: int = 20
    time_horizon: int | None = None
    min_duration: int = 30
    max_duration: int = 90
    t_buf: int = 15
    concourse_length: int = 20
    difficulty_pool_factor: int = 1
    max_retries: int = 1000

    def __post_init__(self):
        for name in ("num_flights", "num_gates", "max_passengers", "time_horizon",
                     "min_duration", "max_duration", "concourse_length", "max_retries"):
            if getattr(self, name) is not None and getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.t_buf < 0:
            raise ValueError("t_buf must be nonnegative")
        if self.min_duration > self.max_duration:
            raise ValueError("min_duration exceeds max_duration")
        if self.difficulty_pool_factor < 1:
            raise ValueError("difficulty_pool_factor must be >= 1")
        if self.num_gates > self.concourse_length + 1:
            raise ValueError("concourse too short to place gates at distinct positions")

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    def horizon(self) -> int:
        """Arrival window length; by default it grows with flights per gate so
        crowded sizes still admit a conflict-free schedule."""
        if self.time_horizon is not None:
            return self.time_horizon
        return max(180, 90 * self.num_flights // self.num_gates)


def generate_instance(config: GenerationConfig, seed: int) -> FlightGateInstance:
    """Draw a random solvable instance.

    Gates sit at distinct integer positions on a straight concourse. Arriving
    passengers leave at position 0, departing passengers enter at the far end,
    and gate-to-gate time is the distance between positions.

    Raises:
        GenerationError: if no instance with a forbidden pair (for two or more
            flights) and a feasible assignment turns up within ``max_retries``.
    """
    rng = np.random.default_rng(seed)
    F, G = config.num_flights, config.num_gates
    L = config.concourse_length

    pos = np.sort(rng.choice(L + 1, size=G, replace=False))
    t_gate = np.abs(pos[:, None] - pos[None, :])
    t_arr = pos
    t_dep = L - pos
    n_arr = rng.integers(0, config.max_passengers + 1, size=F)
    n_dep = rng.integers(0, config.max_passengers + 1, size=F)
    n_trans = rng.integers(0, config.max_passengers + 1, size=(F, F))
    np.fill_diagonal(n_trans, 0)

    for _ in range(config.max_retries):
        t_in = rng.integers(0, config.horizon(), size=F)
        t_out = t_in + rng.integers(config.min_duration, config.max_duration + 1, size=F)
        pairs = _pairs_from_times(t_in, t_out, config.t_buf)
        if F >= 2 and not pairs:
            continue
        if not _colorable(F, pairs, G):
            continue
        return FlightGateInstance(
            num_flights=F, num_gates=G, n_arr=n_arr, n_dep=n_dep, n_trans=n_trans,
            t_arr=t_arr, t_dep=t_dep, t_gate=t_gate, t_in=t_in, t_out=t_out,
            t_buf=config.t_buf,
        )
    raise GenerationError(
        f"no valid schedule after {config.max_retries} draws for {config}"
    )


def _pairs_from_times(t_in, t_out, t_buf) -> frozenset[tuple[int, int]]:
    F = len(t_in)
    return frozenset(
        (i, j)
        for i in range(F)
        for j in range(F)
        if t_in[i] < t_in[j] < t_out[i] + t_buf
    )


def _colorable(num_flights: int, pairs, num_gates: int) -> bool:
    adj = [set() for _ in range(num_flights)]
    for i, j in pairs:
        adj[i].add(j)
        adj[j].add(i)
    order = sorted(range(num_flights), key=lambda v: -len(adj[v]))
    colors = {}

    def place(k):
        if k == len(order):
            return True
        v = order[k]
        used = {colors[u] for u in adj[v] if u in colors}
        # symmetry breaking: never open more than one fresh colour
        limit = min(num_gates, max(colors.values(), default=-1) + 2)
        for c in range(limit):
            if c not in used:
                colors[v] = c
                if place(k + 1):
                    return True
                del colors[v]
        return False

    return place(0)


def forbidden_pairs(inst: FlightGateInstance) -> frozenset[tuple[int, int]]:
    """Ordered flight pairs (i, j) with ``t_in[i] < t_in[j] < t_out[i] + t_buf``."""
    return _pairs_from_times(inst.t_in.tolist(), inst.t_out.tolist(), inst.t_buf)


def _check_assignment(inst: FlightGateInstance, a: Sequence[int]) -> None:
    if len(a) != inst.num_flights:
        raise ValueError(f"assignment has {len(a)} entries, expected {inst.num_flights}")
    for g in a:
        if not 0 <= g < inst.num_gates:
            raise ValueError(f"gate index {g} out of range [0, {inst.num_gates})")


def travel_time_parts(inst: FlightGateInstance, a: Sequence[int]) -> tuple[float, float, float]:
    """Arrival, departure and transfer walking time of an assignment."""
    _check_assignment(inst, a)
    idx = np.asarray(a, dtype=np.intp)
    t_arr = float(np.dot(inst.n_arr, inst.t_arr[idx]))
    t_dep = float(np.dot(inst.n_dep, inst.t_dep[idx]))
    t_trans = float((inst.n_trans * inst.t_gate[np.ix_(idx, idx)]).sum())
    return t_arr, t_dep, t_trans


def travel_time(inst: FlightGateInstance, a: Sequence[int]) -> float:
    return sum(travel_time_parts(inst, a))


def violations(inst: FlightGateInstance, a: Sequence[int], pairs=None) -> int:
    """Number of forbidden pairs that share a gate under ``a``."""
    if pairs is None:
        pairs = forbidden_pairs(inst)
    return sum(1 for i, j in pairs if a[i] == a[j])


def is_feasible(inst: FlightGateInstance, a: Sequence[int], pairs=None) -> bool:
    return violations(inst, a, pairs) == 0


def _check_enumerable(inst: FlightGateInstance) -> int:
    total = inst.num_gates ** inst.num_flights
    if total > MAX_ENUMERATION:
        raise ValueError(
            f"{total} assignments exceed the enumeration cap of {MAX_ENUMERATION}"
        )
    return total


def enumerate_assignments(inst: FlightGateInstance, chunk: int = _CHUNK) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Yield ``(assignments, times, feasible)`` blocks over all |G|^|F| assignments.

    Assignments are ordered lexicographically with flight 0 as the most
    significant digit.
    """
    total = _check_enumerable(inst)
    F, G = inst.num_flights, inst.num_gates
    lin = inst.linear_costs()
    t_gate = inst.t_gate.astype(float)
    trans = [(i, j, float(inst.n_trans[i, j])) for i in range(F) for j in range(F) if inst.n_trans[i, j]]
    pairs = sorted(forbidden_pairs(inst))
    powers = G ** np.arange(F - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        a = (idx[:, None] // powers[None, :]) % G
        times = np.zeros(len(idx))
        for i in range(F):
            times += lin[i, a[:, i]]
        for i, j, n in trans:
            times += n * t_gate[a[:, i], a[:, j]]
        feasible = np.ones(len(idx), dtype=bool)
        for i, j in pairs:
            feasible &= a[:, i] != a[:, j]
        yield a, times, feasible


def solve_exact(inst: FlightGateInstance) -> tuple[float, frozenset[Assignment]]:
    """Brute-force optimum over all feasible assignments, with every tie.

    Raises:
        InfeasibleInstanceError: if no feasible assignment exists.
        ValueError: if |G|^|F| exceeds ``MAX_ENUMERATION``.
    """
    best = math.inf
    optima: list[np.ndarray] = []
    for a, times, feasible in enumerate_assignments(inst):
        if not feasible.any():
            continue
        t = times[feasible]
        block_min = t.min()
        if block_min < best:
            best = block_min
            optima = []
        if block_min == best:
            optima.append(a[feasible][t == best])
    if not optima:
        raise InfeasibleInstanceError("no feasible assignment exists")
    sols = frozenset(tuple(int(g) for g in row) for block in optima for row in block)
    return float(best), sols


def one_hot_constraint_ratio(num_flights: int, num_gates: int) -> float:
    """Fraction of one-hot basis states with exactly one gate per flight."""
    return (num_gates / 2.0**num_gates) ** num_flights


def bits_per_flight(num_gates: int) -> int:
    """Qubits per flight in the binary encoding (at least one)."""
    return max(1, math.ceil(math.log2(num_gates)))


def alias_counts(num_gates: int) -> np.ndarray:
    """How many codewords of the cyclic mapping land on each gate."""
    M = bits_per_flight(num_gates)
    return np.bincount(np.arange(2**M) % num_gates, minlength=num_gates)


def num_qubits(inst_or_flights, num_gates: int | None = None, scheme: str = "binary") -> int:
    if isinstance(inst_or_flights, FlightGateInstance):
        F, G = inst_or_flights.num_flights, inst_or_flights.num_gates
    else:
        F, G = int(inst_or_flights), int(num_gates)
    if scheme == "one_hot":
        return F * G
    if scheme == "binary":
        return F * bits_per_flight(G)
    raise ValueError(f"unknown encoding scheme {scheme!r}")


def feasible_ratio(inst: FlightGateInstance, scheme: str) -> float:
    """Exact fraction of basis states that decode to a feasible assignment.

    One-hot: each feasible assignment is exactly one basis state. Binary: an
    assignment is hit by the product of the alias counts of its gates.
    """
    n = num_qubits(inst, scheme=scheme)
    if n > MAX_RATIO_QUBITS:
        raise ValueError(f"{n} qubits exceed the ratio cap of {MAX_RATIO_QUBITS}")
    if scheme == "one_hot":
        count = sum(int(feasible.sum()) for _, _, feasible in enumerate_assignments(inst))
    else:
        weight = alias_counts(inst.num_gates)
        count = 0
        for a, _, feasible in enumerate_assignments(inst):
            count += int(np.prod(weight[a[feasible]], axis=1).sum())
    return count / 2.0**n


def difficulty_key(inst: FlightGateInstance, rel_window: float = 0.05) -> tuple[int, int]:
    """(near-optimal count, feasible count); fewer near-optima means harder."""
    best, _ = solve_exact(inst)
    cutoff = best * (1.0 + rel_window)
    near = 0
    total = 0
    for _, times, feasible in enumerate_assignments(inst):
        t = times[feasible]
        near += int((t <= cutoff).sum())
        total += int(feasible.sum())
    return near, total


def difficulty_filter(pool: Sequence[FlightGateInstance], keep: int) -> list[FlightGateInstance]:
    """Return the ``keep`` hardest instances, hardest first.

    Hardness is judged by how few feasible assignments lie within 5% of the
    optimum, with larger feasible sets breaking ties. Remaining ties keep pool
    order.
    """
    if keep > len(pool):
        raise ValueError(f"cannot keep {keep} of {len(pool)} instances")
    keys = []
    for k, inst in enumerate(pool):
        near, total = difficulty_key(inst)
        keys.append((near, -total, k))
    keys.sort()
    return [pool[k] for _, _, k in keys[:keep]]

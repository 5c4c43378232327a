"""Diagonal qubit Hamiltonians for the flight-gate assignment problem.

Two encodings are provided:

* one-hot: qubit ``p = i*|G| + alpha`` is 1 iff flight ``i`` sits at gate
  ``alpha``; both constraints enter as quadratic penalties (QUBO), which is
  then rewritten in Pauli-Z form.
* binary: flight ``i`` owns ``M = ceil(log2 |G|)`` qubits ``i*M .. i*M+M-1``
  holding a codeword ``alpha'`` (qubit ``i*M`` is its most significant bit);
  the gate is ``alpha' mod |G|``. Only the forbidden-pair constraint needs a
  penalty.

Qubit ``p`` is bit ``p`` of a basis-state index, and ``Z_p`` has eigenvalue
``(-1)**bit_p``, so a bit value of 1 corresponds to ``x_p = (1 - Z_p)/2 = 1``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .instance import (
    Assignment,
    FlightGateInstance,
    alias_counts,
    bits_per_flight,
    forbidden_pairs,
)

MAX_TABLE_QUBITS = 24
DROP_TOL = 1e-12
GROUND_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class QuboProblem:
    """``Q(x) = c + sum_p h_p x_p + sum_{p,q} J_pq x_p x_q`` (both orders summed)."""

    constant: float
    linear: np.ndarray
    quadratic: np.ndarray

    @property
    def num_vars(self) -> int:
        return len(self.linear)


@dataclass(frozen=True)
class PauliZPolynomial:
    """``constant + sum_t coeff_t * prod_{p in mask_t} Z_p``."""

    num_qubits: int
    constant: float
    terms: tuple[tuple[float, int], ...]

    @classmethod
    def from_mapping(cls, num_qubits: int, coeffs: Mapping[int, float]) -> "PauliZPolynomial":
        """Build from ``{mask: coeff}``; mask 0 is the constant. Tiny terms are dropped."""
        const = float(coeffs.get(0, 0.0))
        terms = tuple(
            (float(c), int(m))
            for m, c in sorted(coeffs.items())
            if m != 0 and abs(c) > DROP_TOL
        )
        for _, m in terms:
            if m >> num_qubits:
                raise ValueError(f"mask {m:#x} acts outside {num_qubits} qubits")
        return cls(num_qubits, const, terms)

    def energy(self, z: int) -> float:
        """Energy of basis state ``z`` by direct term evaluation."""
        e = self.constant
        for c, m in self.terms:
            e += -c if (m & z).bit_count() & 1 else c
        return e

    def locality(self) -> int:
        return max((m.bit_count() for _, m in self.terms), default=0)

    def to_dict(self) -> dict:
        return {
            "num_qubits": self.num_qubits,
            "constant": self.constant,
            "terms": [
                {"coeff": c, "qubits": [p for p in range(self.num_qubits) if m >> p & 1]}
                for c, m in self.terms
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "PauliZPolynomial":
        n = int(data["num_qubits"])
        acc: dict[int, float] = {0: float(data.get("constant", 0.0))}
        for term in data["terms"]:
            mask = 0
            for p in term["qubits"]:
                if not 0 <= p < n:
                    raise ValueError(f"qubit {p} out of range")
                mask |= 1 << p
            acc[mask] = acc.get(mask, 0.0) + float(term["coeff"])
        return cls.from_mapping(n, acc)


@dataclass(frozen=True)
class BinaryEncoding:
    num_flights: int
    num_gates: int

    @property
    def bits_per_flight(self) -> int:
        return bits_per_flight(self.num_gates)

    @property
    def num_qubits(self) -> int:
        return self.num_flights * self.bits_per_flight

    def codeword_bits(self, alpha_prime: int) -> list[int]:
        """Bits ``z_0 .. z_{M-1}`` of a codeword, most significant first."""
        M = self.bits_per_flight
        return [(alpha_prime >> (M - 1 - k)) & 1 for k in range(M)]


@dataclass(frozen=True, eq=False)
class EnergyTable:
    energies: np.ndarray

    @property
    def num_qubits(self) -> int:
        return int(len(self.energies)).bit_length() - 1


def default_penalties(inst: FlightGateInstance) -> tuple[float, float]:
    """Penalty weights ``1 + U`` with ``U`` an upper bound on the travel time."""
    U = (
        inst.n_arr.sum() * inst.t_arr.max()
        + inst.n_dep.sum() * inst.t_dep.max()
        + inst.n_trans.sum() * inst.t_gate.max()
    )
    lam = 1.0 + float(U)
    return lam, lam


def build_qubo(inst: FlightGateInstance, lam_one: float, lam_not: float | None = None) -> QuboProblem:
    """One-hot QUBO with exactly-one-gate and forbidden-pair penalties."""
    if lam_not is None:
        lam_not = lam_one
    if lam_one <= 0 or lam_not <= 0:
        raise ValueError("penalties must be positive")
    F, G = inst.num_flights, inst.num_gates
    h = (inst.linear_costs() - 2.0 * lam_one).ravel()
    # J[i, a, j, b]
    J = inst.n_trans[:, None, :, None] * inst.t_gate[None, :, None, :].astype(float)
    J = J + lam_one * np.eye(F)[:, None, :, None] * np.ones((1, G, 1, G))
    P = np.zeros((F, F))
    for i, j in forbidden_pairs(inst):
        P[i, j] = 1.0
    J = J + lam_not * P[:, None, :, None] * np.eye(G)[None, :, None, :]
    N = F * G
    return QuboProblem(float(F * lam_one), h, J.reshape(N, N))


def qubo_value(q: QuboProblem, bits: Sequence[int]) -> float:
    x = np.asarray(bits, dtype=float)
    if x.shape != (q.num_vars,):
        raise ValueError(f"expected {q.num_vars} bits, got {x.shape}")
    return float(q.constant + q.linear @ x + x @ q.quadratic @ x)


def qubo_to_ising(q: QuboProblem) -> PauliZPolynomial:
    """Substitute ``x_p = (1 - Z_p)/2`` and collect terms.

    Diagonal entries ``J_pp`` contribute ``J_pp x_p``: half to the constant and
    ``-J_pp/2`` to ``Z_p``.
    """
    h, J = q.linear, q.quadratic
    N = q.num_vars
    sym = J + J.T
    diag = np.diag(J)
    const = q.constant + 0.5 * h.sum() + 0.25 * J.sum() + 0.25 * diag.sum()
    lin = -0.5 * h - 0.25 * sym.sum(axis=1)
    coeffs: dict[int, float] = {0: float(const)}
    for p in range(N):
        coeffs[1 << p] = float(lin[p])
    for p in range(N):
        for r in range(p + 1, N):
            if sym[p, r]:
                coeffs[(1 << p) | (1 << r)] = 0.25 * float(sym[p, r])
    return PauliZPolynomial.from_mapping(N, coeffs)


def one_hot_index(a: Sequence[int], num_gates: int) -> int:
    return sum(1 << (i * num_gates + g) for i, g in enumerate(a))


def decode_one_hot(z: int, num_flights: int, num_gates: int) -> Assignment | None:
    """Assignment of a one-hot basis state, or None if some flight has not exactly one gate."""
    out = []
    row = (1 << num_gates) - 1
    for i in range(num_flights):
        chunk = (z >> (i * num_gates)) & row
        if chunk.bit_count() != 1:
            return None
        out.append(chunk.bit_length() - 1)
    return tuple(out)


def cyclic_gate(alpha_prime: int, num_gates: int) -> int:
    M = bits_per_flight(num_gates)
    if not 0 <= alpha_prime < 2**M:
        raise ValueError(f"codeword {alpha_prime} out of range [0, {2**M})")
    return alpha_prime % num_gates


def decode_bits(bits: Sequence[int], enc: BinaryEncoding, num_gates: int | None = None) -> Assignment:
    """Gate per flight from a bit vector (``bits[p]`` is qubit ``p``)."""
    G = enc.num_gates if num_gates is None else num_gates
    M = enc.bits_per_flight
    if len(bits) != enc.num_qubits:
        raise ValueError(f"expected {enc.num_qubits} bits, got {len(bits)}")
    gates = []
    for i in range(enc.num_flights):
        code = 0
        for k in range(M):
            code = (code << 1) | int(bits[i * M + k])
        gates.append(cyclic_gate(code, G))
    return tuple(gates)


def decode_index(z: int, enc: BinaryEncoding) -> Assignment:
    return decode_bits([(z >> p) & 1 for p in range(enc.num_qubits)], enc)


def binary_indices(a: Sequence[int], enc: BinaryEncoding) -> list[int]:
    """Every basis state that decodes to ``a`` (all cyclic aliases)."""
    M, G = enc.bits_per_flight, enc.num_gates
    states = [0]
    for i, g in enumerate(a):
        options = []
        for code in range(g, 2**M, G):
            z = 0
            for k, bit in enumerate(enc.codeword_bits(code)):
                z |= bit << (i * M + k)
            options.append(z)
        states = [s | o for s in states for o in options]
    return sorted(states)


def _sign_matrix(enc: BinaryEncoding) -> np.ndarray:
    """``S[s, code] = (-1)^(parity of the codeword bits selected by s)``.

    Row ``s`` is a subset of the flight-local qubits, bit ``k`` of ``s``
    standing for local qubit ``k`` (global qubit ``i*M + k``).
    """
    M = enc.bits_per_flight
    S = np.empty((2**M, 2**M))
    for s in range(2**M):
        for code in range(2**M):
            z = enc.codeword_bits(code)
            par = sum(z[k] for k in range(M) if s >> k & 1)
            S[s, code] = -1.0 if par & 1 else 1.0
    return S


def build_binary_hamiltonian(inst: FlightGateInstance, lam_not: float) -> PauliZPolynomial:
    """Binary cyclic encoding: arrival + departure + transfer + ``lam_not`` * conflicts.

    Each projector ``|a'><a'|`` on a flight's register equals
    ``2^-M * sum_s S[s, a'] Z_s``, so a per-flight cost vector ``w`` maps to
    Pauli coefficients ``S @ w / 2^M`` and a pairwise cost matrix ``W`` to
    ``S @ W @ S.T / 4^M``.
    """
    if lam_not <= 0:
        raise ValueError("lam_not must be positive")
    enc = BinaryEncoding(inst.num_flights, inst.num_gates)
    F, G, M = inst.num_flights, inst.num_gates, enc.bits_per_flight
    D = 2**M
    gate = np.arange(D) % G
    S = _sign_matrix(enc)
    lin = inst.linear_costs()
    pairs = forbidden_pairs(inst)
    same_gate = (gate[:, None] == gate[None, :]).astype(float)
    t_codes = inst.t_gate[np.ix_(gate, gate)].astype(float)

    acc: dict[int, float] = {}

    def add(mask: int, value: float):
        acc[mask] = acc.get(mask, 0.0) + value

    for i in range(F):
        coef = S @ lin[i, gate] / D
        for s in range(D):
            add(s << (i * M), float(coef[s]))
    for i in range(F):
        for j in range(F):
            if i == j:
                continue
            W = inst.n_trans[i, j] * t_codes
            if (i, j) in pairs:
                W = W + lam_not * same_gate
            if not W.any():
                continue
            coef = S @ W @ S.T / D**2
            for s in range(D):
                for r in range(D):
                    add((s << (i * M)) | (r << (j * M)), float(coef[s, r]))
    return PauliZPolynomial.from_mapping(enc.num_qubits, acc)


def build_one_hot_hamiltonian(inst: FlightGateInstance, lam_one: float | None = None,
                              lam_not: float | None = None) -> PauliZPolynomial:
    d_one, d_not = default_penalties(inst)
    lam_one = d_one if lam_one is None else lam_one
    lam_not = d_not if lam_not is None else lam_not
    return qubo_to_ising(build_qubo(inst, lam_one, lam_not))


def diagonal_energies(h: PauliZPolynomial, max_qubits: int = MAX_TABLE_QUBITS) -> EnergyTable:
    """Energy of every basis state via a fast Walsh-Hadamard transform.

    Placing each coefficient at the index of its mask, the energy vector is the
    (unnormalised) Hadamard transform of that coefficient vector.
    """
    n = h.num_qubits
    if n > max_qubits:
        raise ValueError(f"{n} qubits exceed the energy-table cap of {max_qubits}")
    e = np.zeros(2**n)
    e[0] = h.constant
    for c, m in h.terms:
        e[m] += c
    for p in range(n):
        v = e.reshape(-1, 2, 1 << p)
        a = v[:, 0, :].copy()
        v[:, 0, :] += v[:, 1, :]
        v[:, 1, :] = a - v[:, 1, :]
    e.setflags(write=False)
    return EnergyTable(e)


def ground_bitstrings(table: EnergyTable, rel_tol: float = GROUND_TOL) -> tuple[float, np.ndarray]:
    """Minimum energy and the sorted indices of all states within tolerance of it."""
    e = table.energies
    e_min = float(e.min())
    cut = e_min + rel_tol * max(1.0, abs(e_min))
    return e_min, np.flatnonzero(e <= cut)


def binary_alias_closure(optima: Iterable[Assignment], enc: BinaryEncoding) -> set[int]:
    out: set[int] = set()
    for a in optima:
        out.update(binary_indices(a, enc))
    return out


def encode(inst: FlightGateInstance, scheme: str, lam_one: float | None = None,
           lam_not: float | None = None) -> PauliZPolynomial:
    """Hamiltonian of ``inst`` in the requested scheme with default penalties."""
    if scheme == "one_hot":
        return build_one_hot_hamiltonian(inst, lam_one, lam_not)
    if scheme == "binary":
        if lam_not is None:
            lam_not = default_penalties(inst)[1]
        return build_binary_hamiltonian(inst, lam_not)
    raise ValueError(f"unknown encoding scheme {scheme!r}")


__all__ = [
    "BinaryEncoding", "EnergyTable", "PauliZPolynomial", "QuboProblem",
    "alias_counts", "binary_alias_closure", "binary_indices", "build_binary_hamiltonian",
    "build_one_hot_hamiltonian", "build_qubo", "cyclic_gate", "decode_bits",
    "decode_index", "decode_one_hot", "default_penalties", "diagonal_energies",
    "encode", "ground_bitstrings", "one_hot_index", "qubo_to_ising", "qubo_value",
]

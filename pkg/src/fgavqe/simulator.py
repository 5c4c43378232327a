"""Dense statevector simulation of the two R_Y ansatz families.

Both families stack ``layers`` columns of R_Y rotations (one angle per qubit)
starting from ``|0...0>``. Between consecutive columns the *entangling* family
applies CNOT(q, q+1) for q = 0 .. n-2 in order, the *product* family applies a
T gate on every qubit. A single layer therefore never entangles.

Qubit ``p`` is bit ``p`` of the basis index. Angle ``theta[l*n + q]`` drives
qubit ``q`` in column ``l``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np

FAMILIES = ("entangling", "product")
MAX_QUBITS = 24


@dataclass(frozen=True)
class AnsatzSpec:
    num_qubits: int
    layers: int
    family: str = "entangling"

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError("need at least one qubit")
        if self.layers < 1:
            raise ValueError("need at least one layer")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown ansatz family {self.family!r}")
        if self.num_qubits > MAX_QUBITS:
            raise ValueError(f"{self.num_qubits} qubits exceed the simulator cap of {MAX_QUBITS}")


def param_count(spec: AnsatzSpec) -> int:
    return spec.num_qubits * spec.layers


@lru_cache(maxsize=64)
def _cnot_chain_source(n: int) -> np.ndarray:
    """Gather indices for the CNOT ladder: ``new = old[src]``."""
    z = np.arange(2**n, dtype=np.int64)
    dest = z.copy()
    for q in range(n - 1):
        ctrl = (dest >> q) & 1
        dest ^= ctrl << (q + 1)
    src = np.empty_like(dest)
    src[dest] = z
    src.setflags(write=False)
    return src


@lru_cache(maxsize=64)
def _t_layer_phases(n: int) -> np.ndarray:
    z = np.arange(2**n, dtype=np.int64)
    weight = np.bitwise_count(z)
    phases = np.exp(1j * np.pi / 4 * weight)
    phases.setflags(write=False)
    return phases


_BLOCK = 6


def _ry_stack(thetas: np.ndarray) -> np.ndarray:
    c, s = np.cos(thetas / 2), np.sin(thetas / 2)
    R = np.empty((len(thetas), 2, 2))
    R[:, 0, 0] = c
    R[:, 0, 1] = -s
    R[:, 1, 0] = s
    R[:, 1, 1] = c
    return R


def _kron_block(R: np.ndarray) -> np.ndarray:
    """``R[k-1] (x) ... (x) R[0]``: later qubits are more significant."""
    U = R[0]
    for p in range(1, len(R)):
        m = U.shape[0]
        U = (R[p][:, None, :, None] * U[None, :, None, :]).reshape(2 * m, 2 * m)
    return U


def _rotation_column(psi: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    """Apply R_Y(thetas[p]) on every qubit p, up to ``_BLOCK`` qubits per matmul."""
    n = len(thetas)
    R = _ry_stack(thetas)
    for lo in range(0, n, _BLOCK):
        hi = min(n, lo + _BLOCK)
        U = _kron_block(R[lo:hi])
        if lo == 0:
            psi = (psi.reshape(-1, 1 << hi) @ U.T).reshape(-1)
        else:
            psi = (U @ psi.reshape(-1, 1 << (hi - lo), 1 << lo)).reshape(-1)
    return psi


def _first_column(thetas: np.ndarray) -> np.ndarray:
    # R_Y column on |0...0> is a product state
    amp = np.stack([np.cos(thetas / 2), np.sin(thetas / 2)], axis=1)
    psi = amp[0]
    for v in amp[1:]:
        psi = (v[:, None] * psi[None, :]).ravel()
    return psi


def prepare_state(spec: AnsatzSpec, theta) -> np.ndarray:
    """Amplitudes of the ansatz state, length ``2**n``.

    The entangling family only uses real gates, so its state is returned as a
    real array; the product family returns a complex array.
    """
    theta = np.asarray(theta, dtype=float)
    n, layers = spec.num_qubits, spec.layers
    if theta.shape != (n * layers,):
        raise ValueError(f"expected {n * layers} parameters, got shape {theta.shape}")
    if not np.isfinite(theta).all():
        raise ValueError("parameters must be finite")
    cols = theta.reshape(layers, n)
    psi = _first_column(cols[0])
    if spec.family == "product" and layers > 1:
        psi = psi.astype(complex)
    for layer in range(1, layers):
        if spec.family == "entangling":
            psi = psi[_cnot_chain_source(n)]
        else:
            psi = psi * _t_layer_phases(n)
        psi = _rotation_column(psi, cols[layer])
    return psi


def probabilities(state: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(state):
        return state.real**2 + state.imag**2
    return state * state


def sample_bitstrings(state: np.ndarray, shots: int, seed=None) -> np.ndarray:
    """``shots`` i.i.d. basis indices drawn from the Born distribution."""
    if shots < 1:
        raise ValueError("need at least one shot")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    cdf = np.cumsum(probabilities(state))
    u = rng.random(shots) * cdf[-1]
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, len(cdf) - 1)


def fidelity(state: np.ndarray, ground_set: Iterable[int]) -> float:
    """Probability of measuring any state in ``ground_set``."""
    idx = np.fromiter(ground_set, dtype=np.int64) if not isinstance(ground_set, np.ndarray) else ground_set
    if idx.size == 0:
        raise ValueError("ground set is empty")
    return float(probabilities(state[idx]).sum())

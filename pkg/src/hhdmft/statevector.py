"""Dense statevector simulator for small qubit registers.

Qubit 0 is the leftmost tensor factor (most significant bit of the
basis index).  Conventions fixed here and used everywhere:
RY(theta) = exp(-i theta Y / 2), PauliExp(P, theta) = exp(-i theta P).
Sampling is counter-based (Philox keyed by seed, stream and term
index) so results are reproducible regardless of evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .pauli import PauliString, PauliSum

_H_MAT = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_SDG_MAT = np.array([[1, 0], [0, -1j]], dtype=complex)


@dataclass(frozen=True)
class QuantumState:
    """Complex amplitudes over 2**n basis states, qubit 0 most significant."""

    amplitudes: np.ndarray
    n: int

    def __post_init__(self):
        if self.amplitudes.shape != (2**self.n,):
            raise ValueError(f"amplitude vector of shape {self.amplitudes.shape} does not match n={self.n}")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "QuantumState":
        nrm = self.norm
        if nrm == 0:
            raise ValueError("cannot normalize the zero vector")
        return QuantumState(self.amplitudes / nrm, self.n)


@dataclass(frozen=True)
class RY:
    qubit: int
    angle: float


@dataclass(frozen=True)
class XGate:
    qubit: int


@dataclass(frozen=True)
class CNOT:
    control: int
    target: int


@dataclass(frozen=True)
class PauliExp:
    string: PauliString
    angle: float


Gate = Union[RY, XGate, CNOT, PauliExp]


@dataclass(frozen=True)
class Circuit:
    n: int
    gates: tuple[Gate, ...]

    def __post_init__(self):
        for g in self.gates:
            if isinstance(g, (RY, XGate)) and not 0 <= g.qubit < self.n:
                raise ValueError(f"gate qubit {g.qubit} outside register of {self.n}")
            if isinstance(g, CNOT):
                if not (0 <= g.control < self.n and 0 <= g.target < self.n) or g.control == g.target:
                    raise ValueError(f"invalid CNOT ({g.control}, {g.target}) on register of {self.n}")
            if isinstance(g, PauliExp) and len(g.string) != self.n:
                raise ValueError(f"PauliExp string length {len(g.string)} does not match register of {self.n}")


@dataclass(frozen=True)
class NoiseSpec:
    shots: int
    readout_flip: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if not 0.0 <= self.readout_flip <= 0.5:
            raise ValueError("readout_flip must lie in [0, 0.5]")


def init_basis(n: int, occupation: str) -> QuantumState:
    """Computational basis state from a bit pattern, qubit 0 first."""
    if len(occupation) != n:
        raise ValueError(f"pattern {occupation!r} does not match n={n}")
    if any(ch not in "01" for ch in occupation):
        raise ValueError(f"pattern {occupation!r} must be binary")
    amps = np.zeros(2**n, dtype=complex)
    amps[int(occupation, 2)] = 1.0
    return QuantumState(amps, n)


def _apply_one_qubit(amps: np.ndarray, n: int, qubit: int, mat: np.ndarray) -> np.ndarray:
    tens = amps.reshape((2,) * n)
    tens = np.moveaxis(tens, qubit, 0)
    out = np.tensordot(mat, tens, axes=([1], [0]))
    return np.moveaxis(out, 0, qubit).reshape(-1)


def apply_pauli_string(state: QuantumState, string: PauliString) -> QuantumState:
    """P|psi> computed by bit permutation and exact phases."""
    if len(string) != state.n:
        raise ValueError(f"string length {len(string)} does not match register of {state.n}")
    n = state.n
    dim = 2**n
    idx = np.arange(dim)
    xmask = 0
    phase = np.ones(dim, dtype=complex)
    for q, ch in enumerate(string.ops):
        if ch == "I":
            continue
        bitpos = n - 1 - q
        if ch in "XY":
            xmask |= 1 << bitpos
        if ch in "ZY":
            signs = 1 - 2 * ((idx >> bitpos) & 1)
            phase = phase * signs if ch == "Z" else phase * (1j * signs)
    out = np.empty(dim, dtype=complex)
    out[idx ^ xmask] = phase * state.amplitudes
    return QuantumState(out, n)


def apply_pauli_sum(state: QuantumState, h: PauliSum) -> QuantumState:
    """H|psi>; the result is generally unnormalized."""
    if h.n != state.n:
        raise ValueError(f"operator on {h.n} qubits applied to register of {state.n}")
    acc = np.zeros_like(state.amplitudes)
    for t in h.terms:
        acc += t.coefficient * apply_pauli_string(state, t.string).amplitudes
    return QuantumState(acc, state.n)


def apply_gate(state: QuantumState, gate: Gate) -> QuantumState:
    n = state.n
    if isinstance(gate, RY):
        half = gate.angle / 2
        mat = np.array([[np.cos(half), -np.sin(half)], [np.sin(half), np.cos(half)]], dtype=complex)
        return QuantumState(_apply_one_qubit(state.amplitudes, n, gate.qubit, mat), n)
    if isinstance(gate, XGate):
        mat = np.array([[0, 1], [1, 0]], dtype=complex)
        return QuantumState(_apply_one_qubit(state.amplitudes, n, gate.qubit, mat), n)
    if isinstance(gate, CNOT):
        tens = state.amplitudes.reshape((2,) * n).copy()
        sel = [slice(None)] * n
        sel[gate.control] = 1
        tens[tuple(sel)] = np.flip(tens[tuple(sel)], axis=gate.target - (gate.target > gate.control))
        return QuantumState(tens.reshape(-1), n)
    if isinstance(gate, PauliExp):
        rotated = apply_pauli_string(state, gate.string)
        amps = np.cos(gate.angle) * state.amplitudes - 1j * np.sin(gate.angle) * rotated.amplitudes
        return QuantumState(amps, n)
    raise TypeError(f"unknown gate {gate!r}")


def apply(circuit: Circuit, state: QuantumState) -> QuantumState:
    if circuit.n != state.n:
        raise ValueError(f"circuit on {circuit.n} qubits applied to register of {state.n}")
    for g in circuit.gates:
        state = apply_gate(state, g)
    return state


def overlap(a: QuantumState, b: QuantumState) -> complex:
    """<a|b>."""
    if a.n != b.n:
        raise ValueError(f"register mismatch: {a.n} vs {b.n}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def expectation(state: QuantumState, h: PauliSum) -> float:
    """Exact <s|h|s> for a Hermitian sum."""
    if not h.is_hermitian():
        raise ValueError("expectation requires a Hermitian sum")
    val = overlap(state, apply_pauli_sum(state, h))
    return float(val.real)


def matrix_element(bra: QuantumState, h: PauliSum, ket: QuantumState) -> complex:
    """<bra|h|ket> without Hermiticity restriction."""
    return overlap(bra, apply_pauli_sum(ket, h))


def _term_rng(noise: NoiseSpec, term_index: int, stream: int) -> np.random.Generator:
    # counter-based keying: reproducible per (seed, stream, term) regardless of call order
    key = [noise.seed & 0xFFFFFFFFFFFFFFFF, ((stream << 32) ^ term_index) & 0xFFFFFFFFFFFFFFFF]
    return np.random.Generator(np.random.Philox(key=key))


def _sample_term(state: QuantumState, string: PauliString, noise: NoiseSpec, rng: np.random.Generator) -> float:
    n = state.n
    amps = state.amplitudes
    support = string.support
    for q in support:
        ch = string.ops[q]
        if ch == "Y":
            amps = _apply_one_qubit(amps, n, q, _SDG_MAT)
        if ch in "XY":
            amps = _apply_one_qubit(amps, n, q, _H_MAT)
    probs = np.abs(amps) ** 2
    probs = probs / probs.sum()
    draws = rng.random(noise.shots)
    outcomes = np.searchsorted(np.cumsum(probs), draws)
    bits = (outcomes[:, None] >> (n - 1 - np.array(support))) & 1
    if noise.readout_flip > 0:
        flips = rng.random(bits.shape) < noise.readout_flip
        bits = bits ^ flips
    signs = 1 - 2 * bits
    return float(np.mean(np.prod(signs, axis=1)))


def sample_expectation(state: QuantumState, h: PauliSum, noise: NoiseSpec, stream: int = 0) -> float:
    """Shot-sampled estimate of <s|h|s> with per-qubit readout flips.

    Each non-identity term is rotated into its measurement basis and
    sampled independently; identity terms contribute their coefficient
    exactly.  Fixed (seed, stream) gives a deterministic estimate.
    """
    if not h.is_hermitian():
        raise ValueError("sample_expectation requires a Hermitian sum")
    total = 0.0
    for k, t in enumerate(h.terms):
        if t.string.is_identity:
            total += t.coefficient.real
            continue
        rng = _term_rng(noise, k, stream)
        total += t.coefficient.real * _sample_term(state, t.string, noise, rng)
    return total

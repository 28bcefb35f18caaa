"""Exact algebra over n-qubit Pauli strings and weighted sums.

Strings are written with qubit 0 as the leftmost character and leftmost
tensor factor, so "ZZIII" means Z on qubits 0 and 1 of a five-qubit
register.  Products track their phase exactly as an element of
{+1, -1, +i, -i}; no floating-point drift enters the group algebra.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

DROP_TOL = 1e-12
MATRIX_QUBIT_CAP = 12

_LABELS = "IXYZ"

# (phase, label) for every ordered single-qubit pair a*b
_SINGLE = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}

_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class PauliString:
    """Immutable n-qubit Pauli word, e.g. PauliString("XZXII")."""

    ops: str

    def __post_init__(self):
        if not self.ops or any(ch not in _LABELS for ch in self.ops):
            raise ValueError(f"invalid Pauli labels in {self.ops!r}")

    def __len__(self) -> int:
        return len(self.ops)

    def __str__(self) -> str:
        return self.ops

    @property
    def is_identity(self) -> bool:
        return set(self.ops) == {"I"}

    @property
    def support(self) -> tuple[int, ...]:
        """Qubits on which the string acts nontrivially."""
        return tuple(q for q, ch in enumerate(self.ops) if ch != "I")

    def to_matrix(self) -> np.ndarray:
        if len(self.ops) > MATRIX_QUBIT_CAP:
            raise ValueError(f"register of {len(self.ops)} qubits exceeds dense cap {MATRIX_QUBIT_CAP}")
        m = np.array([[1.0 + 0j]])
        for ch in self.ops:
            m = np.kron(m, _MATS[ch])
        return m


def multiply(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """Return (phase, product) with matrix(a) @ matrix(b) = phase * matrix(product)."""
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    phase: complex = 1
    out = []
    for ca, cb in zip(a.ops, b.ops):
        ph, cc = _SINGLE[(ca, cb)]
        phase *= ph
        out.append(cc)
    return phase, PauliString("".join(out))


@dataclass(frozen=True)
class PauliTerm:
    coefficient: complex
    string: PauliString


@dataclass(frozen=True)
class PauliSum:
    """Weighted sum of Pauli strings over a common register."""

    terms: tuple[PauliTerm, ...]

    def __post_init__(self):
        sizes = {len(t.string) for t in self.terms}
        if len(sizes) > 1:
            raise ValueError(f"mixed register sizes {sorted(sizes)}")

    @classmethod
    def from_terms(cls, pairs: Iterable[tuple[complex, str]]) -> "PauliSum":
        return cls(tuple(PauliTerm(complex(c), PauliString(s)) for c, s in pairs))

    @property
    def n(self) -> int:
        if not self.terms:
            raise ValueError("empty sum has no register size")
        return len(self.terms[0].string)

    def __len__(self) -> int:
        return len(self.terms)

    def __add__(self, other: "PauliSum") -> "PauliSum":
        return PauliSum(self.terms + other.terms)

    def __matmul__(self, other: "PauliSum") -> "PauliSum":
        return sum_product(self, other)

    def scale(self, factor: complex) -> "PauliSum":
        return PauliSum(tuple(PauliTerm(factor * t.coefficient, t.string) for t in self.terms))

    def adjoint(self) -> "PauliSum":
        return PauliSum(tuple(PauliTerm(t.coefficient.conjugate(), t.string) for t in self.terms))

    def simplify(self, tol: float = DROP_TOL) -> "PauliSum":
        return simplify(self, tol)

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        merged = self.simplify()
        return all(abs(t.coefficient.imag) <= tol for t in merged.terms)

    def pad(self, extra_qubits: int) -> "PauliSum":
        """Extend the register with identity-acting qubits on the right."""
        tail = "I" * extra_qubits
        return PauliSum(tuple(PauliTerm(t.coefficient, PauliString(t.string.ops + tail)) for t in self.terms))

    def to_matrix(self) -> np.ndarray:
        return to_matrix(self)

    def render(self) -> str:
        """One 'coeff * STRING' line per term, for logs and manifests."""
        lines = []
        for t in self.terms:
            c = t.coefficient
            coeff = repr(c.real) if abs(c.imag) < DROP_TOL else repr(c)
            lines.append(f"{coeff} * {t.string}")
        return "\n".join(lines)

    def __str__(self) -> str:
        return self.render()


def simplify(s: PauliSum, tol: float = DROP_TOL) -> PauliSum:
    """Merge duplicate strings, drop negligible terms, order lexicographically."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    acc: dict[str, complex] = {}
    for t in s.terms:
        acc[t.string.ops] = acc.get(t.string.ops, 0) + t.coefficient
    kept = [(c, ops) for ops, c in acc.items() if abs(c) > tol]
    kept.sort(key=lambda p: p[1])
    return PauliSum.from_terms((c, ops) for c, ops in kept)


def sum_product(a: PauliSum, b: PauliSum) -> PauliSum:
    """Distributed, simplified product of two sums."""
    if a.terms and b.terms and a.n != b.n:
        raise ValueError(f"register size mismatch: {a.n} vs {b.n}")
    out = []
    for ta in a.terms:
        for tb in b.terms:
            phase, prod = multiply(ta.string, tb.string)
            out.append(PauliTerm(ta.coefficient * tb.coefficient * phase, prod))
    return simplify(PauliSum(tuple(out)))


def to_matrix(s: PauliSum) -> np.ndarray:
    """Dense matrix of the sum; qubit 0 is the leftmost (most significant) factor."""
    n = s.n
    if n > MATRIX_QUBIT_CAP:
        raise ValueError(f"register of {n} qubits exceeds dense cap {MATRIX_QUBIT_CAP}")
    dim = 2**n
    m = np.zeros((dim, dim), dtype=complex)
    for t in s.terms:
        m += t.coefficient * t.string.to_matrix()
    return m


def identity(n: int) -> PauliSum:
    return PauliSum.from_terms([(1.0, "I" * n)])

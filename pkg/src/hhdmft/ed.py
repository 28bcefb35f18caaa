"""Exact-diagonalization references: full spectra, Lehmann Green's
functions and a classical Lanczos recursion with reorthogonalization.

Everything here works on dense matrices and serves as ground truth for
the circuit-based paths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ChainConsistencyError, DegenerateGroundStateError
from .model import ModelParams, build_full_hamiltonian, fermion_matrices
from .spectra import KrylovChain, Spectrum, merged_spectrum

HERMITICITY_TOL = 1e-10
DEGENERACY_TOL = 1e-8
LANCZOS_B2_FLOOR = 1e-12


@dataclass(frozen=True)
class EigenSystem:
    """Full spectrum: energies ascending, eigenvectors as matching columns."""

    energies: np.ndarray
    vectors: np.ndarray

    @property
    def ground_energy(self) -> float:
        return float(self.energies[0])

    def ground_degeneracy(self, tol: float = DEGENERACY_TOL) -> int:
        return int(np.sum(self.energies - self.energies[0] < tol))


def diagonalize(h: np.ndarray) -> EigenSystem:
    """Dense Hermitian eigendecomposition with an input sanity gate."""
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    if np.max(np.abs(h - h.conj().T)) > HERMITICITY_TOL:
        raise ValueError("matrix is not Hermitian within 1e-10")
    energies, vectors = np.linalg.eigh(h)
    return EigenSystem(energies, vectors)


def ground_state(es: EigenSystem, tol: float = DEGENERACY_TOL) -> np.ndarray:
    if es.ground_degeneracy(tol) > 1:
        raise DegenerateGroundStateError(
            f"ground state is {es.ground_degeneracy(tol)}-fold degenerate within {tol}"
        )
    return es.vectors[:, 0]


def impurity_ground(p: ModelParams) -> tuple[float, np.ndarray]:
    """Ground energy and dense ground vector of the full Hamiltonian.

    At n_boson_levels = 2 the dense index order coincides with the
    five-qubit register order, so the vector doubles as qubit amplitudes.
    """
    es = diagonalize(build_full_hamiltonian(p))
    return es.ground_energy, ground_state(es)


def impurity_operator(spin: str, n_boson_levels: int) -> np.ndarray:
    """Dense annihilation operator for the impurity orbital of the given spin."""
    mode = {"up": 0, "down": 1}.get(spin)
    if mode is None:
        raise ValueError(f"spin must be 'up' or 'down', got {spin!r}")
    return np.kron(fermion_matrices()[mode], np.eye(n_boson_levels))


def lehmann_greens(p: ModelParams, spin: str = "up", average_degenerate: bool = False) -> Spectrum:
    """Pole spectrum of the impurity Green's function from the full solution.

    Particle poles sit at E_m - E0 with weights |<m|c+|GS>|^2, hole poles
    are mapped to -(E_m - E0) with weights |<m|c|GS>|^2.  At half filling
    the weights sum to 1 (anticommutator sum rule).
    """
    es = diagonalize(build_full_hamiltonian(p))
    degeneracy = es.ground_degeneracy()
    if degeneracy > 1 and not average_degenerate:
        raise DegenerateGroundStateError(
            f"ground state is {degeneracy}-fold degenerate; pass average_degenerate=True to average"
        )
    c = impurity_operator(spin, p.n_boson_levels)
    cd = c.conj().T
    omegas, weights = [], []
    excitations = es.energies - es.ground_energy
    for g in range(degeneracy):
        gs = es.vectors[:, g]
        particle_amps = es.vectors.conj().T @ (cd @ gs)
        hole_amps = es.vectors.conj().T @ (c @ gs)
        omegas.append(excitations)
        weights.append(np.abs(particle_amps) ** 2 / degeneracy)
        omegas.append(-excitations)
        weights.append(np.abs(hole_amps) ** 2 / degeneracy)
    return merged_spectrum(np.concatenate(omegas), np.concatenate(weights))


def reference_lanczos(
    h: np.ndarray,
    start: np.ndarray,
    depth: int,
    prefactor: float | None = None,
    e0: float = 0.0,
    side: int = 1,
) -> KrylovChain:
    """Classical three-term recursion with explicit reorthogonalization.

    Terminates early when the next b^2 falls below 1e-12; the returned
    chain records the achieved depth.  prefactor defaults to the squared
    norm of the start vector, matching its Green's-function residue.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    start = np.asarray(start, dtype=complex)
    norm2 = float(np.real(np.vdot(start, start)))
    if norm2 == 0:
        raise ValueError("start vector must be nonzero")
    if prefactor is None:
        prefactor = norm2

    v = start / np.sqrt(norm2)
    basis = [v]
    a: list[float] = []
    b2: list[float] = []
    while True:
        hv = h @ v
        a.append(float(np.real(np.vdot(v, hv))))
        if len(b2) == depth:
            break
        w = hv - a[-1] * v
        if len(basis) > 1:
            w = w - np.sqrt(b2[-1]) * basis[-2]
        for u in basis:  # explicit reorthogonalization, twice
            w = w - np.vdot(u, w) * u
        for u in basis:
            w = w - np.vdot(u, w) * u
        beta2 = float(np.real(np.vdot(w, w)))
        if beta2 < -LANCZOS_B2_FLOOR:
            raise ChainConsistencyError(f"negative b^2 = {beta2} in exact recursion")
        if beta2 < LANCZOS_B2_FLOOR:
            break
        b2.append(beta2)
        v = w / np.sqrt(beta2)
        basis.append(v)
    return KrylovChain(a=tuple(a), b2=tuple(b2), prefactor=prefactor, e0=e0, side=side)

"""Two-angle variational ground-state search on the truncated Hamiltonian.

The state family couples a fermionic mixing angle theta0 (doublon pair
versus spin singlet in the half-filled sector) with a bosonic angle
theta1 (empty versus single boson occupation):

    (1/sqrt2) [sin t0 (|1100> + |0011>) + cos t0 (|1001> - |0110>)]
        x (cos t1 |0_B> + sin t1 |1_B>)

Basis kets are (imp_up, imp_dn, bath_up, bath_dn) occupations; the
relative signs follow from applying creation operators in canonical
mode order.  The preparation circuit carries exactly two parameterized
RY rotations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, build_pauli_hamiltonian
from .pauli import PauliString
from .statevector import (
    CNOT,
    Circuit,
    NoiseSpec,
    PauliExp,
    QuantumState,
    RY,
    XGate,
    expectation,
    sample_expectation,
)

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class AnsatzAngles:
    theta0: float
    theta1: float

    def __post_init__(self):
        if not (math.isfinite(self.theta0) and math.isfinite(self.theta1)):
            raise ValueError("angles must be finite")

    def canonical(self) -> "AnsatzAngles":
        return AnsatzAngles(self.theta0 % TWO_PI, self.theta1 % TWO_PI)


@dataclass(frozen=True)
class LandscapeGrid:
    """Rectangular angle grid; the upper range endpoints are excluded (periodic)."""

    theta0_points: int = 64
    theta1_points: int = 64
    theta0_range: tuple[float, float] = (0.0, TWO_PI)
    theta1_range: tuple[float, float] = (0.0, TWO_PI)

    def __post_init__(self):
        if self.theta0_points < 2 or self.theta1_points < 2:
            raise ValueError("grid needs at least 2 points per axis")
        if not (self.theta0_range[0] < self.theta0_range[1] and self.theta1_range[0] < self.theta1_range[1]):
            raise ValueError("angle ranges must be nonempty")

    @property
    def theta0_values(self) -> np.ndarray:
        return np.linspace(*self.theta0_range, self.theta0_points, endpoint=False)

    @property
    def theta1_values(self) -> np.ndarray:
        return np.linspace(*self.theta1_range, self.theta1_points, endpoint=False)


@dataclass(frozen=True)
class VqeResult:
    angles: AnsatzAngles
    energy: float
    state: QuantumState


def ansatz_state(a: AnsatzAngles) -> QuantumState:
    """Normalized family state built directly in the computational basis."""
    s0, c0 = math.sin(a.theta0), math.cos(a.theta0)
    s1, c1 = math.sin(a.theta1), math.cos(a.theta1)
    inv = 1 / math.sqrt(2)
    fermion = {0b1100: inv * s0, 0b0011: inv * s0, 0b1001: inv * c0, 0b0110: -inv * c0}
    amps = np.zeros(32, dtype=complex)
    for pattern, fv in fermion.items():
        amps[pattern * 2] = fv * c1
        amps[pattern * 2 + 1] = fv * s1
    return QuantumState(amps, 5)


def ansatz_circuit(a: AnsatzAngles) -> Circuit:
    """Preparation circuit: two parameterized RY gates carry theta0 and theta1.

    The fixed RY(pi/2) plus the exp(i pi/4 ZY) entangler rotate the
    impurity pair into sin/cos superpositions of the four half-filled
    patterns; CNOT+X then populate the bath as the particle-number
    complement of the impurity.
    """
    return Circuit(
        5,
        (
            RY(0, math.pi / 2),
            RY(1, 2 * a.theta0 - math.pi / 2),
            PauliExp(PauliString("ZYIII"), -math.pi / 4),
            CNOT(0, 2),
            XGate(2),
            CNOT(1, 3),
            XGate(3),
            RY(4, 2 * a.theta1),
        ),
    )


def energy_landscape(
    p: ModelParams,
    grid: LandscapeGrid = LandscapeGrid(),
    mode: str = "exact",
    noise: NoiseSpec | None = None,
) -> np.ndarray:
    """Energy at every grid node; rows follow theta0, columns theta1."""
    if mode not in ("exact", "sampled"):
        raise ValueError(f"mode must be 'exact' or 'sampled', got {mode!r}")
    if mode == "sampled" and noise is None:
        raise ValueError("sampled mode needs a NoiseSpec")
    h = build_pauli_hamiltonian(p)
    t0s, t1s = grid.theta0_values, grid.theta1_values
    energies = np.empty((len(t0s), len(t1s)))
    for i, t0 in enumerate(t0s):
        for j, t1 in enumerate(t1s):
            state = ansatz_state(AnsatzAngles(t0, t1))
            if mode == "exact":
                energies[i, j] = expectation(state, h)
            else:
                energies[i, j] = sample_expectation(state, h, noise, stream=i * len(t1s) + j)
    return energies


def _quadratic_refine(h, grid: LandscapeGrid, energies: np.ndarray, i: int, j: int):
    """Stationary point of a least-squares quadric through the 3x3 stencil."""
    t0s, t1s = grid.theta0_values, grid.theta1_values
    span0 = grid.theta0_range[1] - grid.theta0_range[0]
    span1 = grid.theta1_range[1] - grid.theta1_range[0]
    rows, rhs = [], []
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            ii, jj = (i + di) % len(t0s), (j + dj) % len(t1s)
            # unwrap across the periodic seam so offsets stay local
            x = t0s[ii] - t0s[i]
            x -= span0 * round(x / span0)
            y = t1s[jj] - t1s[j]
            y -= span1 * round(y / span1)
            rows.append([1.0, x, y, x * x, x * y, y * y])
            rhs.append(energies[ii, jj])
    coeff, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    hess = np.array([[2 * coeff[3], coeff[4]], [coeff[4], 2 * coeff[5]]])
    if np.linalg.det(hess) <= 0 or hess[0, 0] <= 0:
        return None
    step = np.linalg.solve(hess, -np.array([coeff[1], coeff[2]]))
    if abs(step[0]) > span0 / len(t0s) or abs(step[1]) > span1 / len(t1s):
        return None
    return AnsatzAngles(float(t0s[i] + step[0]), float(t1s[j] + step[1]))


def find_ground_state(
    p: ModelParams,
    grid: LandscapeGrid = LandscapeGrid(),
    mode: str = "exact",
    noise: NoiseSpec | None = None,
) -> VqeResult:
    """Grid argmin of the landscape, sharpened by one local quadratic fit.

    The refined point is kept only when its exact energy improves on the
    grid node, so the result never regresses below grid resolution.  In
    sampled mode the fit is skipped; shot noise would swamp it.
    """
    energies = energy_landscape(p, grid, mode, noise)
    i, j = np.unravel_index(int(np.argmin(energies)), energies.shape)
    best = AnsatzAngles(float(grid.theta0_values[i]), float(grid.theta1_values[j]))
    best_energy = float(energies[i, j])
    if mode == "exact":
        h = build_pauli_hamiltonian(p)
        refined = _quadratic_refine(h, grid, energies, int(i), int(j))
        if refined is not None:
            refined_energy = expectation(ansatz_state(refined), h)
            if refined_energy < best_energy:
                best, best_energy = refined, refined_energy
    return VqeResult(angles=best, energy=best_energy, state=ansatz_state(best))

"""Krylov chains, pole spectra, continued fractions and broadened curves.

A KrylovChain stores the three-term recursion coefficients in absolute
energy units together with the ground-energy reference e0 and a side
flag: +1 for particle-type excitations (poles at eig - e0) and -1 for
hole-type ones (poles mirrored to the negative axis).  Spectra are
pole/weight lists referenced to the Fermi level at omega = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import PoleHitError

MERGE_TOL = 1e-9
WEIGHT_FLOOR = 1e-10


@dataclass(frozen=True)
class KrylovChain:
    """Recursion coefficients a_0..a_d and b_1^2..b_d^2."""

    a: tuple[float, ...]
    b2: tuple[float, ...]
    prefactor: float = 1.0
    e0: float = 0.0
    side: int = 1

    def __post_init__(self):
        if len(self.a) == 0:
            raise ValueError("chain needs at least a_0")
        if len(self.b2) != len(self.a) - 1:
            raise ValueError(f"got {len(self.a)} diagonal and {len(self.b2)} off-diagonal entries")
        if any(v <= 0 for v in self.b2):
            raise ValueError("all stored b^2 must be positive")
        if self.side not in (1, -1):
            raise ValueError(f"side must be +1 or -1, got {self.side}")

    @property
    def depth(self) -> int:
        return len(self.b2)

    def shifted_diagonal(self) -> np.ndarray:
        """Diagonal referenced to the Fermi level, mirrored for hole chains."""
        return self.side * (np.asarray(self.a) - self.e0)


@dataclass(frozen=True)
class Spectrum:
    """Poles (omega, weight) sorted by frequency."""

    poles: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if any(w < 0 for _, w in self.poles):
            raise ValueError("weights must be nonnegative")

    @property
    def omegas(self) -> np.ndarray:
        return np.array([w for w, _ in self.poles])

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.poles])

    @property
    def total_weight(self) -> float:
        return float(sum(w for _, w in self.poles))

    def innermost(self, side: int) -> tuple[float, float]:
        """Nearest pole strictly on the given side of the Fermi level."""
        candidates = [(om, w) for om, w in self.poles if om * side > 0]
        if not candidates:
            raise ValueError(f"no poles on side {side:+d}")
        return min(candidates, key=lambda p: abs(p[0]))


@dataclass(frozen=True)
class FrequencyGrid:
    omega_min: float
    omega_max: float
    n_points: int = 801
    delta: float = 0.1

    def __post_init__(self):
        if not self.omega_min < self.omega_max:
            raise ValueError("omega_min must be below omega_max")
        if self.n_points < 2:
            raise ValueError("n_points must be >= 2")
        if self.delta <= 0:
            raise ValueError("delta must be positive")

    @property
    def omegas(self) -> np.ndarray:
        return np.linspace(self.omega_min, self.omega_max, self.n_points)


def merged_spectrum(omegas, weights, merge_tol: float = MERGE_TOL, weight_floor: float = WEIGHT_FLOOR) -> Spectrum:
    """Sort poles, merge near-degenerate ones, drop negligible weights."""
    order = np.argsort(omegas)
    poles: list[list[float]] = []
    for k in order:
        om, w = float(omegas[k]), float(weights[k])
        if poles and abs(om - poles[-1][0]) <= merge_tol:
            total = poles[-1][1] + w
            if total > 0:
                # weight-average the position so merging is order-independent
                poles[-1][0] = (poles[-1][0] * poles[-1][1] + om * w) / total
            poles[-1][1] = total
        else:
            poles.append([om, w])
    return Spectrum(tuple((om, w) for om, w in poles if w > weight_floor))


def continued_fraction(z: complex, chain: KrylovChain) -> complex:
    """prefactor / (z - a~_0 - b_1^2 / (z - a~_1 - ...)), evaluated bottom-up."""
    diag = chain.shifted_diagonal()
    tail = 0j
    try:
        for n in range(chain.depth, 0, -1):
            tail = chain.b2[n - 1] / (z - diag[n] - tail)
        result = chain.prefactor / (z - diag[0] - tail)
    except ZeroDivisionError as exc:
        raise PoleHitError(f"continued fraction evaluated on a pole at z={z}") from exc
    if not (np.isfinite(result.real) and np.isfinite(result.imag)):
        raise PoleHitError(f"continued fraction diverged at z={z}")
    return result


def poles_weights(chain: KrylovChain) -> Spectrum:
    """Pole decomposition via the symmetric tridiagonal eigenproblem."""
    diag = chain.shifted_diagonal()
    if chain.depth == 0:
        return merged_spectrum(np.array([diag[0]]), np.array([chain.prefactor]))
    off = np.sqrt(np.asarray(chain.b2))
    evals, evecs = eigh_tridiagonal(diag, chain.side * off)
    weights = chain.prefactor * np.abs(evecs[0, :]) ** 2
    return merged_spectrum(evals, weights)


def assemble_particle_hole(particle: Spectrum) -> Spectrum:
    """Mirror the particle side through omega = 0; total weight doubles."""
    omegas = np.concatenate([particle.omegas, -particle.omegas])
    weights = np.concatenate([particle.weights, particle.weights])
    return merged_spectrum(omegas, weights)


def assemble_two_sided(hole: Spectrum, particle: Spectrum) -> Spectrum:
    """Union of independently computed hole and particle sides."""
    omegas = np.concatenate([hole.omegas, particle.omegas])
    weights = np.concatenate([hole.weights, particle.weights])
    return merged_spectrum(omegas, weights)


def greens_curve(s: Spectrum, grid: FrequencyGrid) -> np.ndarray:
    """G(omega + i delta) sampled on the grid."""
    z = grid.omegas[:, None] + 1j * grid.delta
    return np.sum(s.weights[None, :] / (z - s.omegas[None, :]), axis=1)


def spectral_function(s: Spectrum, grid: FrequencyGrid) -> np.ndarray:
    """A(omega) = sum_k w_k (delta/pi) / ((omega - omega_k)^2 + delta^2)."""
    return -greens_curve(s, grid).imag / np.pi


def mirror_asymmetry(s: Spectrum) -> float:
    """Worst mismatch between each pole and its reflection; diagnostic for assembled spectra."""
    worst = 0.0
    for om, w in s.poles:
        best = min(
            (max(abs(om + om2), abs(w - w2)) for om2, w2 in s.poles),
            default=np.inf,
        )
        worst = max(worst, best)
    return worst

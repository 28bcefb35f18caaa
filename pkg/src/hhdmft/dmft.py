"""Two-site self-consistency on the Bethe lattice.

The impurity spectrum at hybridization V yields a quasiparticle weight
Z, and the lattice condition collapses to V_new^2 = Z * M2 where M2 is
the second moment of the noninteracting density of states.  Both the
damped fixed-point iteration and the V-grid scan (curve crossing) are
provided; they must agree on V*.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .ed import impurity_ground, impurity_operator, reference_lanczos
from .errors import NumericalError
from .kvqa import KrylovSearchConfig, solve_impurity
from .model import ModelParams, build_full_hamiltonian
from .spectra import Spectrum, assemble_two_sided, poles_weights
from .statevector import NoiseSpec

logger = logging.getLogger(__name__)

SOLVERS = ("exact-lanczos", "kvqa-direct", "kvqa-variational", "kvqa-sampled")
KVQA_MODES = {
    "kvqa-direct": "direct",
    "kvqa-variational": "variational-exact",
    "kvqa-sampled": "variational-sampled",
}
# the one-up and one-down sectors are four dimensional, so the chain closes here
CHAIN_DEPTH = 3


@dataclass(frozen=True)
class DmftConfig:
    m2: float = 1.0
    v_initial: float = 0.8
    tol: float = 1e-3
    max_iter: int = 50
    mixing: float = 0.7
    solver: str = "exact-lanczos"

    def __post_init__(self):
        if self.m2 <= 0:
            raise ValueError(f"m2 must be positive, got {self.m2}")
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if not 0 < self.mixing <= 1:
            raise ValueError(f"mixing must be in (0, 1], got {self.mixing}")
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}, got {self.solver!r}")


@dataclass(frozen=True)
class DmftResult:
    v_star: float
    z_star: float
    history: tuple[tuple[float, float], ...]
    converged: bool


@dataclass(frozen=True)
class DmftScan:
    rows: tuple[tuple[float, float, float], ...]
    v_cross: float | None


def impurity_spectrum(
    p: ModelParams,
    solver: str = "exact-lanczos",
    cfg: KrylovSearchConfig | None = None,
    noise: NoiseSpec | None = None,
) -> Spectrum:
    """Two-sided spectrum from independent hole and particle chains."""
    if solver == "exact-lanczos":
        hd = build_full_hamiltonian(p)
        e0, gs = impurity_ground(p)
        c = impurity_operator("up", p.n_boson_levels)
        hole = reference_lanczos(hd, c @ gs, CHAIN_DEPTH, e0=e0, side=-1)
        particle = reference_lanczos(hd, c.conj().T @ gs, CHAIN_DEPTH, e0=e0, side=1)
        return assemble_two_sided(poles_weights(hole), poles_weights(particle))
    mode = KVQA_MODES.get(solver)
    if mode is None:
        raise ValueError(f"solver must be one of {SOLVERS}, got {solver!r}")
    search = cfg or KrylovSearchConfig(mode=mode)
    if search.mode != mode:
        search = replace(search, mode=mode)
    runs = solve_impurity(p, depth=CHAIN_DEPTH, cfg=search, noise=noise)
    return assemble_two_sided(
        poles_weights(runs["hole"].chain), poles_weights(runs["particle"].chain)
    )


def quasiparticle_weight_peaks(s: Spectrum) -> float:
    """Summed weight of the poles nearest the Fermi level on each side."""
    if not s.poles:
        raise ValueError("empty spectrum")
    z = 0.0
    missing = []
    for side in (-1, 1):
        try:
            z += s.innermost(side)[1]
        except ValueError:
            missing.append("hole" if side < 0 else "particle")
    if missing:
        logger.warning("no %s-side pole; quasiparticle weight uses one side only", *missing[:1])
    return z


def bare_greens(v: float, z: complex) -> complex:
    """Impurity propagator with the correlated terms switched off."""
    if z == 0:
        raise ValueError("z must be nonzero")
    return 1.0 / (z - v**2 / z)


def greens_from_poles(s: Spectrum, z: complex) -> complex:
    return complex(np.sum(s.weights / (z - s.omegas)))


def quasiparticle_weight_derivative(
    g: Spectrum, v: float, h: float = 1e-3, delta: float = 1e-4
) -> float:
    """Z from the slope of the self-energy at the Fermi level.

    Noise-fragile; kept as a cross-check on the pole-weight route.
    """
    if h <= 0 or delta <= 0:
        raise ValueError("h and delta must be positive")

    def sigma(omega: float) -> complex:
        zc = omega + 1j * delta
        return 1.0 / bare_greens(v, zc) - 1.0 / greens_from_poles(g, zc)

    slope = (sigma(h) - sigma(-h)).real / (2 * h)
    denom = 1.0 - slope
    if abs(denom) < 1e-8:
        raise NumericalError("self-energy slope gives a divergent quasiparticle weight")
    return 1.0 / denom


def update_hybridization(z: float, m2: float) -> float:
    if z <= 0:
        raise ValueError(f"quasiparticle weight must be positive, got {z}")
    return float(np.sqrt(z * m2))


def _weight_at(
    p: ModelParams,
    v: float,
    solver: str,
    cfg: KrylovSearchConfig | None,
    noise: NoiseSpec | None,
) -> float:
    s = impurity_spectrum(replace(p, v=v), solver, cfg, noise)
    return quasiparticle_weight_peaks(s)


def run_dmft(
    p: ModelParams,
    cfg: DmftConfig | None = None,
    noise: NoiseSpec | None = None,
    search: KrylovSearchConfig | None = None,
) -> DmftResult:
    """Damped fixed-point iteration on V.

    Stops once the undamped update distance |sqrt(Z m2) - V| drops
    below tol; the reported v_star is then the undamped target, which
    satisfies v_star^2 = z_star * m2 exactly.
    """
    cfg = cfg or DmftConfig()
    v = cfg.v_initial
    history: list[tuple[float, float]] = []
    for _ in range(cfg.max_iter):
        z = _weight_at(p, v, cfg.solver, search, noise)
        history.append((v, z))
        target = update_hybridization(z, cfg.m2)
        if abs(target - v) < cfg.tol:
            return DmftResult(v_star=target, z_star=z, history=tuple(history), converged=True)
        v = (1 - cfg.mixing) * v + cfg.mixing * target
    return DmftResult(v_star=v, z_star=history[-1][1], history=tuple(history), converged=False)


def scan_hybridization(
    p: ModelParams,
    cfg: DmftConfig | None = None,
    v_min: float = 0.5,
    v_max: float = 1.1,
    n_points: int = 20,
    noise: NoiseSpec | None = None,
    search: KrylovSearchConfig | None = None,
) -> DmftScan:
    """Tabulate (V, Z, sqrt(Z m2)) on a V grid and locate the curve crossing."""
    cfg = cfg or DmftConfig()
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    rows = []
    for v in np.linspace(v_min, v_max, n_points):
        z = _weight_at(p, float(v), cfg.solver, search, noise)
        rows.append((float(v), z, update_hybridization(z, cfg.m2)))
    v_cross = None
    resid = [target - v for v, _, target in rows]
    for k in range(len(rows) - 1):
        if resid[k] == 0:
            v_cross = rows[k][0]
            break
        if resid[k] * resid[k + 1] < 0:
            v0, v1 = rows[k][0], rows[k + 1][0]
            r0, r1 = resid[k], resid[k + 1]
            v_cross = v0 + r0 * (v1 - v0) / (r0 - r1)
            break
    return DmftScan(rows=tuple(rows), v_cross=v_cross)

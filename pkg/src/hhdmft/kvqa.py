"""Variational construction of the impurity Krylov chain.

The chain coefficients a_n, b_n^2 are accumulated from expectation
values of H and H^2 on the current chain state; the next chain state is
found either by the exact three-term recursion (direct mode) or by
minimizing the three-part cost

    eps0 = (|<cand|H|prev>| / b_n - 1)^2     right matrix element
    eps1 = |<cand|prev>|^2                   orthogonal to prev
    eps2 = |<cand|prev2>|^2                  orthogonal to prev2

over a two-angle candidate family (variational modes).  The family at
each step is the unit sphere spanned by one fermionic generator image
(swap of the unpaired spin between impurity and bath), one bosonic one
(boson-qubit flip) and their product, orthogonalized against the
current state:

    cand(alpha, beta) = cos(a) u_F + sin(a) (cos(b) u_B + sin(b) u_FB)

In sampled mode the eps0 matrix element comes from the ancilla-free
short-time estimator |<cand|e^{-iHt}|prev>| / t extrapolated to t -> 0,
with binomial shot noise on each |overlap|^2, and the chain terminates
cleanly once b_n^2 drops below the noise floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import minimize

from .errors import ChainConsistencyError, EmptySectorError
from .model import ModelParams, build_jw_hamiltonian, impurity_annihilation
from .pauli import PauliString, PauliSum, sum_product, to_matrix
from .spectra import KrylovChain
from .statevector import (
    NoiseSpec,
    PauliExp,
    QuantumState,
    apply_gate,
    apply_pauli_string,
    apply_pauli_sum,
    expectation,
    matrix_element,
    overlap,
    sample_expectation,
)
from .vqe import LandscapeGrid

DIRECT_B2_FLOOR = 1e-10
GS_DROP_TOL = 1e-8

# fermion patterns (imp_up, imp_dn, bath_up, bath_dn) reachable from the
# half-filled ground sector by removing/adding one up electron
SECTOR_PATTERNS = {"hole": (4, 1), "particle": (14, 11)}

# generator strings: swap the unpaired down electron between impurity and
# bath (X on qubits 1 and 3), flip the boson qubit, and their product
FAMILY_GENERATORS = ("IXIXI", "IIIIX", "IXIXX")


def default_search_grid() -> LandscapeGrid:
    return LandscapeGrid(64, 64, (0.0, math.pi), (0.0, 2 * math.pi))


@dataclass(frozen=True)
class KrylovSearchConfig:
    grid: LandscapeGrid = field(default_factory=default_search_grid)
    t_points: int = 10
    t_range: tuple[float, float] = (0.01, 0.3)
    b2_floor: float = 1e-3
    mode: str = "variational-exact"

    def __post_init__(self):
        if self.mode not in ("direct", "variational-exact", "variational-sampled"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.t_points < 2:
            raise ValueError("t_points must be >= 2")
        if not 0 < self.t_range[0] < self.t_range[1]:
            raise ValueError("t_range must satisfy 0 < lo < hi")
        if self.b2_floor <= 0:
            raise ValueError("b2_floor must be positive")

    @property
    def effective_b2_floor(self) -> float:
        # exact-arithmetic modes resolve b^2 to machine precision
        return self.b2_floor if self.mode == "variational-sampled" else DIRECT_B2_FLOOR


@dataclass(frozen=True)
class KrylovStep:
    index: int
    angles: tuple[float, float] | None
    grid_cost: float | None
    final_cost: float | None
    second_minimum: tuple[float, float, float] | None
    epsilons: tuple[float, float, float] | None


@dataclass(frozen=True)
class KrylovRun:
    kind: str
    mode: str
    chain: KrylovChain
    states: tuple[QuantumState, ...]
    steps: tuple[KrylovStep, ...]
    surfaces: tuple[np.ndarray, ...]
    diagnostics: tuple[str, ...]
    terminated_early: bool
    b2_tail: float | None


def sector_indices(kind: str, n_boson_levels: int = 2) -> list[int]:
    patterns = SECTOR_PATTERNS.get(kind)
    if patterns is None:
        raise ValueError(f"kind must be 'hole' or 'particle', got {kind!r}")
    return [f * n_boson_levels + b for f in patterns for b in range(n_boson_levels)]


def chi0(gs: QuantumState, kind: str) -> tuple[QuantumState, float]:
    """Normalized impurity-up excitation of the ground state and its weight.

    hole: c|GS>, squared norm <n_up>; particle: c+|GS>, squared norm <1 - n_up>.
    """
    if kind not in SECTOR_PATTERNS:
        raise ValueError(f"kind must be 'hole' or 'particle', got {kind!r}")
    op = impurity_annihilation("up")
    if kind == "particle":
        op = op.adjoint().simplify()
    image = apply_pauli_sum(gs, op)
    norm2 = float(np.real(np.vdot(image.amplitudes, image.amplitudes)))
    if norm2 < 1e-14:
        raise EmptySectorError(f"{kind} excitation of this state vanishes")
    return QuantumState(image.amplitudes / math.sqrt(norm2), gs.n), norm2


def cost_epsilons(
    candidate: QuantumState,
    prev: QuantumState,
    prev2: QuantumState | None,
    h: PauliSum,
    bn: float,
) -> tuple[float, float, float]:
    """The three cost contributions, exactly evaluated."""
    if bn <= 0:
        raise ValueError(f"bn must be positive, got {bn}")
    eps0 = (abs(matrix_element(candidate, h, prev)) / bn - 1) ** 2
    eps1 = abs(overlap(candidate, prev)) ** 2
    eps2 = abs(overlap(candidate, prev2)) ** 2 if prev2 is not None else 0.0
    return float(eps0), float(eps1), float(eps2)


def _dense_evolver(h: PauliSum):
    evals, evecs = eigh(to_matrix(h))

    def evolve(amps: np.ndarray, t: float) -> np.ndarray:
        return evecs @ (np.exp(-1j * evals * t) * (evecs.conj().T @ amps))

    return evolve


def _single_trotter(state: QuantumState, h: PauliSum, t: float) -> QuantumState:
    """One ordered product step prod_m exp(-i c_m P_m t), first term first."""
    for term in h.terms:
        state = apply_gate(state, PauliExp(term.string, term.coefficient.real * t))
    return state


def short_time_matrix_element(
    a_state: QuantumState,
    b_state: QuantumState,
    h: PauliSum,
    cfg: KrylovSearchConfig,
    evolution: str = "exact",
    noise: NoiseSpec | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """|<a|H|b>| from the t -> 0 extrapolation of |<a|e^{-iHt}|b>| / t.

    evolution picks the propagator: 'exact' (oracle) or 'trotter'
    (single ordered product step, device-faithful).  With a NoiseSpec,
    each sampled |overlap|^2 gets binomial shot noise.
    """
    if evolution not in ("exact", "trotter"):
        raise ValueError(f"evolution must be 'exact' or 'trotter', got {evolution!r}")
    ts = np.linspace(*cfg.t_range, cfg.t_points)
    dense = _dense_evolver(h) if evolution == "exact" else None
    f = np.empty(cfg.t_points)
    for k, t in enumerate(ts):
        if dense is not None:
            evolved = dense(b_state.amplitudes, t)
        else:
            evolved = _single_trotter(b_state, h, t).amplitudes
        f[k] = abs(np.vdot(a_state.amplitudes, evolved))
    if noise is not None:
        if rng is None:
            rng = np.random.default_rng(noise.seed)
        p = np.clip(f**2, 0.0, 1.0)
        f = np.sqrt(rng.binomial(noise.shots, p) / noise.shots)
    design = np.stack([np.ones_like(ts), ts], axis=1)
    coeff, *_ = np.linalg.lstsq(design, f / ts, rcond=None)
    return float(coeff[0])


def _complement_basis(prev: QuantumState, kind: str) -> np.ndarray:
    """Orthonormal 3-frame spanning the sector complement of prev.

    Generator images are orthogonalized against prev and each other;
    canonical sector basis vectors fill in if an image degenerates.
    """
    candidates = [apply_pauli_string(prev, PauliString(g)).amplitudes for g in FAMILY_GENERATORS]
    for idx in sector_indices(kind):
        unit = np.zeros_like(prev.amplitudes)
        unit[idx] = 1.0
        candidates.append(unit)
    basis: list[np.ndarray] = []
    for vec in candidates:
        if len(basis) == 3:
            break
        u = vec - np.vdot(prev.amplitudes, vec) * prev.amplitudes
        for w in basis:
            u = u - np.vdot(w, u) * w
        norm = np.linalg.norm(u)
        if norm > GS_DROP_TOL:
            basis.append(u / norm)
    if len(basis) < 3:
        raise ChainConsistencyError("candidate family collapsed below three directions")
    return np.array(basis)


def _candidate_grid(basis: np.ndarray, grid: LandscapeGrid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    alphas, betas = grid.theta0_values, grid.theta1_values
    am, bm = np.meshgrid(alphas, betas, indexing="ij")
    coef = np.stack([np.cos(am), np.sin(am) * np.cos(bm), np.sin(am) * np.sin(bm)], axis=-1)
    cands = coef @ basis
    return alphas, betas, cands


def _local_minima(cost: np.ndarray) -> list[tuple[int, int]]:
    """Grid nodes at or below all 8 neighbors (both angle axes wrap)."""
    keep = np.ones_like(cost, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            keep &= cost <= np.roll(np.roll(cost, di, axis=0), dj, axis=1)
    nodes = [tuple(ij) for ij in np.argwhere(keep)]
    return sorted(nodes, key=lambda ij: cost[ij])


def _sampled_eps0(
    cands: np.ndarray,
    prev: QuantumState,
    h: PauliSum,
    cfg: KrylovSearchConfig,
    bn: float,
    noise: NoiseSpec,
    rng: np.random.Generator,
) -> np.ndarray:
    """Vectorized short-time-estimator eps0 over the whole candidate grid."""
    flat = cands.reshape(-1, cands.shape[-1])
    ts = np.linspace(*cfg.t_range, cfg.t_points)
    f = np.empty((flat.shape[0], cfg.t_points))
    for k, t in enumerate(ts):
        evolved = _single_trotter(prev, h, t).amplitudes
        f[:, k] = np.abs(flat.conj() @ evolved)
    p = np.clip(f**2, 0.0, 1.0)
    f = np.sqrt(rng.binomial(noise.shots, p) / noise.shots)
    design = np.stack([np.ones_like(ts), ts], axis=1)
    coeff, *_ = np.linalg.lstsq(design, (f / ts).T, rcond=None)
    estimates = coeff[0]
    return ((estimates / bn - 1) ** 2).reshape(cands.shape[:2])


def _chain_rng(noise: NoiseSpec, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[noise.seed & (2**64 - 1), stream & (2**64 - 1)]))


def krylov_chain(
    start: QuantumState,
    h: PauliSum,
    depth: int,
    cfg: KrylovSearchConfig | None = None,
    kind: str = "particle",
    noise: NoiseSpec | None = None,
    e0: float = 0.0,
    prefactor: float = 1.0,
) -> KrylovRun:
    """Build the chain seeded by a normalized start state.

    Coefficients: a_{n-1} = <prev|H|prev>, b_n^2 = <prev|H^2|prev> -
    a_{n-1}^2 - b_{n-1}^2 with H^2 expanded in the Pauli algebra.  The
    chain stops at the requested depth or when b_n^2 falls below the
    mode's floor; a negative b_n^2 is an internal-consistency error in
    exact modes and a clean, diagnosed stop in sampled mode.  Direct
    mode works on any Hermitian h; the variational modes search the
    two-angle impurity sector family, so they need the five-qubit
    register and a kind.
    """
    cfg = cfg or KrylovSearchConfig()
    if cfg.mode == "variational-sampled" and noise is None:
        raise ValueError("variational-sampled mode needs a NoiseSpec")
    if depth < 0:
        raise ValueError("depth must be >= 0")
    sampled = cfg.mode == "variational-sampled"
    if cfg.mode != "direct" and start.n != 5:
        raise ValueError("variational modes search the five-qubit impurity sector family")
    kind_offset = 0 if kind == "hole" else 1 << 16

    chi = start.normalized()
    h2 = sum_product(h, h)
    side = -1 if kind == "hole" else 1

    def h_expect(state: QuantumState, op: PauliSum, stream: int) -> float:
        if sampled:
            return sample_expectation(state, op, noise, stream=kind_offset + stream)
        return expectation(state, op)

    a: list[float] = []
    b2: list[float] = []
    states: list[QuantumState] = [chi]
    steps: list[KrylovStep] = []
    surfaces: list[np.ndarray] = []
    diagnostics: list[str] = []
    terminated_early = False
    b2_tail = None
    prev, prev2 = chi, None

    for n in range(1, depth + 1):
        a_prev = h_expect(prev, h, 4 * n)
        h2_prev = h_expect(prev, h2, 4 * n + 1)
        b2_n = h2_prev - a_prev**2 - (b2[-1] if b2 else 0.0)
        a.append(a_prev)
        floor = cfg.effective_b2_floor
        if b2_n < floor:
            if b2_n < -floor and not sampled:
                raise ChainConsistencyError(f"b^2 = {b2_n} at step {n} in {cfg.mode} mode")
            reason = "negative b^2" if b2_n < 0 else "b^2 below floor"
            diagnostics.append(f"step {n}: {reason} ({b2_n:.3e} < {floor:.0e}); chain terminated")
            terminated_early = True
            b2_tail = float(b2_n)
            break
        bn = math.sqrt(b2_n)
        b2.append(float(b2_n))

        if cfg.mode == "direct":
            hp = apply_pauli_sum(prev, h)
            r = hp.amplitudes - a_prev * prev.amplitudes
            # two explicit reorthogonalization sweeps subsume the b_{n-1} term
            for _ in range(2):
                for u in states:
                    r = r - np.vdot(u.amplitudes, r) * u.amplitudes
            norm = np.linalg.norm(r)
            if norm < 1e-12:
                diagnostics.append(f"step {n}: recursion residual vanished; chain terminated")
                terminated_early = True
                break
            candidate = QuantumState(r / norm, prev.n)
            steps.append(KrylovStep(n, None, None, None, None, None))
        else:
            basis = _complement_basis(prev, kind)
            alphas, betas, cands = _candidate_grid(basis, cfg.grid)
            hp = apply_pauli_sum(prev, h).amplitudes
            if sampled:
                rng = _chain_rng(noise, kind_offset + 4 * n + 2)
                eps0_surface = _sampled_eps0(cands, prev, h, cfg, bn, noise, rng)
            else:
                eps0_surface = (np.abs(cands @ hp.conj()) / bn - 1) ** 2
            cost = eps0_surface + np.abs(cands @ prev.amplitudes.conj()) ** 2
            if prev2 is not None:
                cost = cost + np.abs(cands @ prev2.amplitudes.conj()) ** 2
            surfaces.append(cost)

            minima = _local_minima(cost)
            i, j = minima[0]
            second = None
            if len(minima) > 1:
                i2, j2 = minima[1]
                second = (float(alphas[i2]), float(betas[j2]), float(cost[i2, j2]))
            grid_cost = float(cost[i, j])
            angles = np.array([alphas[i], betas[j]])
            final_cost = grid_cost

            if not sampled:
                # polish the exact cost; Nelder-Mead never goes above its start value
                def exact_cost(ab):
                    c = (
                        np.cos(ab[0]) * basis[0]
                        + np.sin(ab[0]) * (np.cos(ab[1]) * basis[1] + np.sin(ab[1]) * basis[2])
                    )
                    e0c = (abs(np.vdot(c, hp)) / bn - 1) ** 2
                    e1c = abs(np.vdot(c, prev.amplitudes)) ** 2
                    e2c = abs(np.vdot(c, prev2.amplitudes)) ** 2 if prev2 is not None else 0.0
                    return e0c + e1c + e2c

                res = minimize(
                    exact_cost,
                    angles,
                    method="Nelder-Mead",
                    options=dict(xatol=1e-13, fatol=1e-16, maxiter=4000, maxfev=4000),
                )
                if res.fun <= grid_cost:
                    angles, final_cost = res.x, float(res.fun)

            amps = (
                np.cos(angles[0]) * basis[0]
                + np.sin(angles[0]) * (np.cos(angles[1]) * basis[1] + np.sin(angles[1]) * basis[2])
            )
            candidate = QuantumState(amps, prev.n)
            eps = cost_epsilons(candidate, prev, prev2, h, bn)
            steps.append(
                KrylovStep(n, (float(angles[0]), float(angles[1])), grid_cost, final_cost, second, eps)
            )

        states.append(candidate)
        prev2, prev = prev, candidate

    if not terminated_early:
        # diagonal entry of the deepest chain state
        a.append(h_expect(prev, h, 4 * (depth + 1)))
    chain = KrylovChain(a=tuple(a), b2=tuple(b2), prefactor=prefactor, e0=e0, side=side)
    return KrylovRun(
        kind=kind,
        mode=cfg.mode,
        chain=chain,
        states=tuple(states),
        steps=tuple(steps),
        surfaces=tuple(surfaces),
        diagnostics=tuple(diagnostics),
        terminated_early=terminated_early,
        b2_tail=b2_tail,
    )


def solve_impurity(
    p: ModelParams,
    depth: int = 3,
    cfg: KrylovSearchConfig | None = None,
    noise: NoiseSpec | None = None,
) -> dict[str, KrylovRun]:
    """Hole and particle chains from the exact ground state of the JW Hamiltonian."""
    from .ed import impurity_ground

    h = build_jw_hamiltonian(p)
    e0, gs_vec = impurity_ground(p)
    gs = QuantumState(gs_vec.astype(complex), 5)
    runs = {}
    for kind in ("hole", "particle"):
        chi, norm2 = chi0(gs, kind)
        runs[kind] = krylov_chain(
            chi, h, depth, cfg, kind=kind, noise=noise, e0=e0, prefactor=norm2
        )
    return runs

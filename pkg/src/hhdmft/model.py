"""Hamiltonians for the two-site Hubbard-Holstein impurity problem.

One impurity orbital hybridized with one bath orbital, both spinful,
plus a local boson mode.  Qubit register order is (impurity up,
impurity down, bath up, bath down, boson), qubit 0 leftmost.  The
dense matrix basis index is fermion_pattern * n_boson_levels +
boson_level, so the four fermion bits are the high-order index bits.

Three encodings are provided:
  build_full_hamiltonian   dense fermion-boson matrix, any boson cutoff
  build_jw_hamiltonian     complete Jordan-Wigner Pauli image at one
                           boson qubit; equals the dense matrix exactly
  build_pauli_hamiltonian  truncated device form: terms whose
                           expectation vanishes in the half-filled
                           sector are dropped
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError
from .pauli import PauliSum

N_FERMION_MODES = 4
N_QUBITS = 5

MU_CONVENTIONS = ("u-half", "displaced", "half-filling-fit")

_ZERO_COEFF = 1e-12


def _keep_nonzero(pairs: list[tuple[float, str]]) -> list[tuple[float, str]]:
    # order-preserving: term order doubles as the product order in step evolution
    return [(c, s) for c, s in pairs if abs(c) > _ZERO_COEFF]


@dataclass(frozen=True)
class ModelParams:
    u: float
    v: float
    mu: float
    omega0: float
    lam: float
    n_boson_levels: int = 2

    def __post_init__(self):
        for name in ("u", "v", "mu", "omega0", "lam"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if self.omega0 <= 0:
            raise ConfigError(f"omega0 must be positive, got {self.omega0}")
        if self.n_boson_levels < 2:
            raise ConfigError(f"n_boson_levels must be >= 2, got {self.n_boson_levels}")

    @property
    def dense_dimension(self) -> int:
        return 16 * self.n_boson_levels


def jw_annihilation(i: int, n_modes: int) -> PauliSum:
    """Fermion annihilation on mode i as a Pauli sum: Z-chain then (X+iY)/2."""
    if not 0 <= i < n_modes:
        raise ValueError(f"mode {i} outside register of {n_modes}")
    prefix = "Z" * i
    suffix = "I" * (n_modes - 1 - i)
    return PauliSum.from_terms([(0.5, prefix + "X" + suffix), (0.5j, prefix + "Y" + suffix)])


def impurity_annihilation(spin: str) -> PauliSum:
    """c_{imp,spin} on the five-qubit register (fermion modes padded with the boson qubit)."""
    mode = {"up": 0, "down": 1}.get(spin)
    if mode is None:
        raise ValueError(f"spin must be 'up' or 'down', got {spin!r}")
    return jw_annihilation(mode, N_FERMION_MODES).pad(1)


def impurity_number_operator() -> PauliSum:
    """n_up + n_down on the impurity, five-qubit register."""
    return PauliSum.from_terms([(1.0, "IIIII"), (-0.5, "ZIIII"), (-0.5, "IZIII")])


def build_pauli_hamiltonian(p: ModelParams) -> PauliSum:
    """Truncated five-qubit device Hamiltonian (one boson qubit).

    Single-Z fermion terms and their boson-coupled partners are dropped;
    they average to zero over the half-filled sector.  Valid only for
    n_boson_levels = 2.
    """
    if p.n_boson_levels != 2:
        raise ConfigError(f"truncated Pauli form needs n_boson_levels = 2, got {p.n_boson_levels}")
    u, v, mu, w0, lam = p.u, p.v, p.mu, p.omega0, p.lam
    return PauliSum.from_terms(
        _keep_nonzero(
            [
                (u / 4 - mu + w0 / 2, "IIIII"),
                (u / 4, "ZZIII"),
                (-v / 2, "XZXII"),
                (-v / 2, "YZYII"),
                (-v / 2, "IXZXI"),
                (-v / 2, "IYZYI"),
                (-w0 / 2, "IIIIZ"),
                (lam, "IIIIX"),
            ]
        )
    )


def build_jw_hamiltonian(p: ModelParams) -> PauliSum:
    """Complete Jordan-Wigner Pauli image at one boson qubit.

    to_matrix of this sum equals build_full_hamiltonian(n_boson_levels=2)
    exactly.  The hopping sign differs from the truncated form by a
    bath-site gauge; spectra are unaffected.  Term order is fixed and
    is the default product order for step-wise time evolution.
    """
    if p.n_boson_levels != 2:
        raise ConfigError(f"Jordan-Wigner form needs n_boson_levels = 2, got {p.n_boson_levels}")
    u, v, mu, w0, lam = p.u, p.v, p.mu, p.omega0, p.lam
    return PauliSum.from_terms(
        _keep_nonzero(
            [
                (u / 4 - mu + w0 / 2, "IIIII"),
                (u / 4, "ZZIII"),
                (v / 2, "XZXII"),
                (v / 2, "YZYII"),
                (v / 2, "IXZXI"),
                (v / 2, "IYZYI"),
                (-w0 / 2, "IIIIZ"),
                (lam, "IIIIX"),
                (mu / 2 - u / 4, "ZIIII"),
                (mu / 2 - u / 4, "IZIII"),
                (-lam / 2, "ZIIIX"),
                (-lam / 2, "IZIIX"),
            ]
        )
    )


@lru_cache(maxsize=None)
def fermion_matrices() -> tuple[np.ndarray, ...]:
    """Dense 16x16 annihilation matrices for the four fermion modes."""
    mats = []
    for i in range(N_FERMION_MODES):
        mats.append(jw_annihilation(i, N_FERMION_MODES).to_matrix())
    return tuple(mats)


def boson_lowering(n_levels: int) -> np.ndarray:
    b = np.zeros((n_levels, n_levels), dtype=complex)
    for k in range(1, n_levels):
        b[k - 1, k] = np.sqrt(k)
    return b


def build_full_hamiltonian(p: ModelParams) -> np.ndarray:
    """Dense Hamiltonian on (fermion pattern) x (boson level), dim 16 * n_boson_levels.

    All terms kept: U n_up n_dn - mu (n_up + n_dn) + V sum_s (c+_imp,s c_bath,s + h.c.)
    + omega0 b+b + lam (n_up + n_dn)(b+ + b), boson ladder truncated at the cutoff.
    """
    c = fermion_matrices()
    cd = tuple(m.conj().T for m in c)
    n_up, n_dn = cd[0] @ c[0], cd[1] @ c[1]
    hop = sum(cd[a] @ c[b] + cd[b] @ c[a] for a, b in ((0, 2), (1, 3)))
    h_f = p.u * (n_up @ n_dn) - p.mu * (n_up + n_dn) + p.v * hop
    nb = p.n_boson_levels
    b = boson_lowering(nb)
    bd = b.conj().T
    n_imp = n_up + n_dn
    h = np.kron(h_f, np.eye(nb))
    h += p.omega0 * np.kron(np.eye(16), bd @ b)
    h += p.lam * np.kron(n_imp, bd + b)
    return h


def impurity_occupation_matrix(n_boson_levels: int) -> np.ndarray:
    """(n_up + n_dn) x identity on the boson ladder, matching build_full_hamiltonian."""
    c = fermion_matrices()
    n_imp = c[0].conj().T @ c[0] + c[1].conj().T @ c[1]
    return np.kron(n_imp, np.eye(n_boson_levels))


def half_filled_sector_indices(n_boson_levels: int) -> list[int]:
    """Dense indices of the two-electron, S_z = 0 fermion patterns, all boson levels."""
    patterns = (3, 6, 9, 12)
    return [f * n_boson_levels + level for f in patterns for level in range(n_boson_levels)]


@lru_cache(maxsize=None)
def half_filling_mu(
    u: float, v: float, omega0: float, lam: float, n_boson_levels: int = 2,
    bracket: tuple[float, float] = (0.2, 3.8),
) -> float:
    """mu at which the ground state carries exactly one impurity electron.

    Solved by bracketed root finding on <n_imp>(mu) - 1 over the dense
    ground state; the boson coupling displaces this away from U/2.
    """
    n_op = impurity_occupation_matrix(n_boson_levels)

    def filling_error(mu: float) -> float:
        h = build_full_hamiltonian(ModelParams(u, v, mu, omega0, lam, n_boson_levels))
        _, vecs = np.linalg.eigh(h)
        gs = vecs[:, 0]
        return float((gs.conj() @ n_op @ gs).real) - 1.0

    return float(brentq(filling_error, *bracket, xtol=1e-12))


def mu_from_convention(
    name: str, u: float, v: float, omega0: float, lam: float, n_boson_levels: int = 2
) -> float:
    """Chemical potential under a named convention.

    u-half: mu = U/2.  displaced: U/2 shifted by the polaron energy
    -2 lam^2/omega0.  half-filling-fit: root of <n_imp> = 1.
    """
    if name == "u-half":
        return u / 2
    if name == "displaced":
        return u / 2 - 2 * lam**2 / omega0
    if name == "half-filling-fit":
        return half_filling_mu(u, v, omega0, lam, n_boson_levels)
    raise ConfigError(f"unknown mu convention {name!r}; expected one of {MU_CONVENTIONS}")


def representative_params(v: float = 0.8, n_boson_levels: int = 2) -> ModelParams:
    """Benchmark parameter point: U=4, omega0=5, lam=1.5, mu from the half-filling fit."""
    u, omega0, lam = 4.0, 5.0, 1.5
    mu = half_filling_mu(u, v, omega0, lam, n_boson_levels)
    return ModelParams(u=u, v=v, mu=mu, omega0=omega0, lam=lam, n_boson_levels=n_boson_levels)

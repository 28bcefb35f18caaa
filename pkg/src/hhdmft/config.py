"""TOML run configuration shared by every workbench subcommand.

A config document has flat model keys at the top level plus optional
sections for each tunable stage.  Parsing is strict: unknown keys are
rejected with their dotted path so typos never silently fall back to
defaults, and every applied default is echoed back through as_dict so
manifests record the full effective configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # 3.10 fallback, same API
    import tomli as tomllib

from .dmft import DmftConfig
from .errors import ConfigError
from .evolution import TimeGrid
from .model import ModelParams, mu_from_convention
from .spectra import FrequencyGrid
from .statevector import NoiseSpec
from .vqe import LandscapeGrid

TOP_LEVEL_KEYS = ("U", "V", "mu", "omega0", "lambda", "n_boson_levels", "seed", "output_dir")
SECTION_KEYS = ("landscape", "frequency", "time", "noise", "dmft")
REQUIRED_KEYS = ("U", "V", "omega0", "lambda")

DEFAULT_CONFIG = """\
U = 4.0
V = 0.8
omega0 = 5.0
lambda = 1.5
"""


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration with all defaults applied.

    mu_spec keeps the chemical potential exactly as written (a number
    or a convention name) so manifests echo the author's intent; the
    resolved value lives in params.mu.
    """

    params: ModelParams
    mu_spec: float | str = "u-half"
    seed: int = 0
    output_dir: str = "out"
    landscape: LandscapeGrid = field(default_factory=LandscapeGrid)
    frequency: FrequencyGrid = field(default_factory=lambda: FrequencyGrid(-12.0, 12.0))
    time: TimeGrid = field(default_factory=TimeGrid)
    noise: NoiseSpec | None = None
    dmft: DmftConfig = field(default_factory=DmftConfig)

    def as_dict(self) -> dict:
        """Full echo, defaults included, in manifest-ready plain types."""
        return {
            "U": self.params.u,
            "V": self.params.v,
            "mu": self.mu_spec,
            "mu_value": self.params.mu,
            "omega0": self.params.omega0,
            "lambda": self.params.lam,
            "n_boson_levels": self.params.n_boson_levels,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "landscape": {
                "theta0_points": self.landscape.theta0_points,
                "theta1_points": self.landscape.theta1_points,
                "theta0_range": list(self.landscape.theta0_range),
                "theta1_range": list(self.landscape.theta1_range),
            },
            "frequency": {
                "omega_min": self.frequency.omega_min,
                "omega_max": self.frequency.omega_max,
                "n_points": self.frequency.n_points,
                "delta": self.frequency.delta,
            },
            "time": {"t_max": self.time.t_max, "n_steps": self.time.n_steps},
            "noise": None
            if self.noise is None
            else {
                "shots": self.noise.shots,
                "readout_flip": self.noise.readout_flip,
                "seed": self.noise.seed,
            },
            "dmft": {
                "m2": self.dmft.m2,
                "v_initial": self.dmft.v_initial,
                "tol": self.dmft.tol,
                "max_iter": self.dmft.max_iter,
                "mixing": self.dmft.mixing,
                "solver": self.dmft.solver,
            },
        }


def _require_number(value, path: str) -> float:
    # bool passes isinstance(int) checks, so rule it out explicitly
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path} must be a number, got {value!r}")
    return float(value)


def _require_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path} must be an integer, got {value!r}")
    return value


def _require_str(value, path: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{path} must be a string, got {value!r}")
    return value


def _require_pair(value, path: str) -> tuple[float, float]:
    if not isinstance(value, list) or len(value) != 2:
        raise ConfigError(f"{path} must be a two-element array, got {value!r}")
    return (_require_number(value[0], path), _require_number(value[1], path))


def _take_section(raw: dict, name: str) -> dict:
    section = raw.get(name, {})
    if not isinstance(section, dict):
        raise ConfigError(f"{name} must be a table, got {section!r}")
    return section


def _reject_unknown(section: dict, name: str, allowed: tuple[str, ...]) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key {name}.{key}")


def _build(factory, kwargs: dict, name: str):
    try:
        return factory(**kwargs)
    except (ValueError, ConfigError) as exc:
        raise ConfigError(f"[{name}] {exc}") from None


def parse_config(text: str) -> RunConfig:
    """Parse and validate a config document, applying documented defaults."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config syntax error: {exc}") from None

    for key, value in raw.items():
        if key in TOP_LEVEL_KEYS:
            continue
        if key in SECTION_KEYS:
            if not isinstance(value, dict):
                raise ConfigError(f"{key} must be a table, got {value!r}")
            continue
        raise ConfigError(f"unknown key {key}")
    for key in REQUIRED_KEYS:
        if key not in raw:
            raise ConfigError(f"missing required key {key}")

    u = _require_number(raw["U"], "U")
    v = _require_number(raw["V"], "V")
    omega0 = _require_number(raw["omega0"], "omega0")
    lam = _require_number(raw["lambda"], "lambda")
    n_boson_levels = _require_int(raw.get("n_boson_levels", 2), "n_boson_levels")
    seed = _require_int(raw.get("seed", 0), "seed")
    output_dir = _require_str(raw.get("output_dir", "out"), "output_dir")

    mu_spec = raw.get("mu", "u-half")
    if isinstance(mu_spec, str):
        mu = mu_from_convention(mu_spec, u, v, omega0, lam, n_boson_levels)
    else:
        mu = _require_number(mu_spec, "mu")
        mu_spec = mu
    params = ModelParams(u=u, v=v, mu=mu, omega0=omega0, lam=lam, n_boson_levels=n_boson_levels)

    sec = _take_section(raw, "landscape")
    _reject_unknown(sec, "landscape", ("theta0_points", "theta1_points", "theta0_range", "theta1_range"))
    kwargs = {}
    for key in ("theta0_points", "theta1_points"):
        if key in sec:
            kwargs[key] = _require_int(sec[key], f"landscape.{key}")
    for key in ("theta0_range", "theta1_range"):
        if key in sec:
            kwargs[key] = _require_pair(sec[key], f"landscape.{key}")
    landscape = _build(LandscapeGrid, kwargs, "landscape")

    sec = _take_section(raw, "frequency")
    _reject_unknown(sec, "frequency", ("omega_min", "omega_max", "n_points", "delta"))
    kwargs = {
        "omega_min": _require_number(sec.get("omega_min", -12.0), "frequency.omega_min"),
        "omega_max": _require_number(sec.get("omega_max", 12.0), "frequency.omega_max"),
    }
    if "n_points" in sec:
        kwargs["n_points"] = _require_int(sec["n_points"], "frequency.n_points")
    if "delta" in sec:
        kwargs["delta"] = _require_number(sec["delta"], "frequency.delta")
    frequency = _build(FrequencyGrid, kwargs, "frequency")

    sec = _take_section(raw, "time")
    _reject_unknown(sec, "time", ("t_max", "n_steps"))
    kwargs = {}
    if "t_max" in sec:
        kwargs["t_max"] = _require_number(sec["t_max"], "time.t_max")
    if "n_steps" in sec:
        kwargs["n_steps"] = _require_int(sec["n_steps"], "time.n_steps")
    time_grid = _build(TimeGrid, kwargs, "time")

    noise = None
    if "noise" in raw:
        sec = _take_section(raw, "noise")
        _reject_unknown(sec, "noise", ("shots", "readout_flip"))
        if "shots" not in sec:
            raise ConfigError("noise.shots is required when [noise] is present")
        kwargs = {
            "shots": _require_int(sec["shots"], "noise.shots"),
            "readout_flip": _require_number(sec.get("readout_flip", 0.0), "noise.readout_flip"),
            "seed": seed,
        }
        noise = _build(NoiseSpec, kwargs, "noise")

    sec = _take_section(raw, "dmft")
    _reject_unknown(sec, "dmft", ("m2", "v_initial", "tol", "max_iter", "mixing", "solver"))
    kwargs = {}
    for key in ("m2", "v_initial", "tol", "mixing"):
        if key in sec:
            kwargs[key] = _require_number(sec[key], f"dmft.{key}")
    if "max_iter" in sec:
        kwargs["max_iter"] = _require_int(sec["max_iter"], "dmft.max_iter")
    if "solver" in sec:
        kwargs["solver"] = _require_str(sec["solver"], "dmft.solver")
    dmft = _build(DmftConfig, kwargs, "dmft")

    return RunConfig(
        params=params,
        mu_spec=mu_spec,
        seed=seed,
        output_dir=output_dir,
        landscape=landscape,
        frequency=frequency,
        time=time_grid,
        noise=noise,
        dmft=dmft,
    )

"""Experiment configuration: JSON file plus ``key=value`` overrides."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from .lattice import DispersionMatrix

SCENARIOS = (
    "admissibility-scan",
    "cluster-report",
    "resonance-census",
    "divisor-ledger",
    "effective-run",
    "full-vs-effective",
    "nls-run",
    "scattering-compare",
    "dispersive-check",
)


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    scenario: str
    # dispersion matrix: preset name ("golden", "identity", "random") or literal entries
    matrix: str = "golden"
    matrix_entries: list | None = None
    matrix_seed: int = 0
    d: int = 2
    tau: float | None = None
    # lattice / clusters / resonance
    R: int = 8
    radii: list = field(default_factory=lambda: [8, 16, 32])
    c_d: float = 0.5
    theta: float = 0.2
    alpha0_constant: float | None = None
    tol_res: float = 1e-9
    samples: int = 200_000
    # norms
    s: float = 2.0
    sigma: float = 0.1
    delta: float = 0.01
    gamma: float = 0.2
    # waveguide grid
    L: float = 200.0
    Nx: int = 4096
    # time stepping
    t0: float = 1.0
    t1: float = 10.0
    h: float = 0.01
    steps: list = field(default_factory=lambda: [1e-2, 5e-3, 2.5e-3])
    stride: int = 50
    record_times: list = field(default_factory=list)
    fit_window: list = field(default_factory=lambda: [2.0, 40.0])
    # initial data
    eps: float = 0.05
    amplitude: float = 1.0
    data_modes: list = field(default_factory=lambda: [[0, 0], [1, 0]])
    n_xi: int = 8
    xi_max: float = 3.0
    width: float = 1.0
    seed: int = 0
    # dispersive sweep
    times: list = field(default_factory=lambda: [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0])
    # fixtures
    fixture: str | None = None
    fixture_dir: str | None = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {', '.join(SCENARIOS)}")
        if self.matrix not in ("golden", "identity", "random", "entries"):
            raise ConfigError(f"unknown matrix preset {self.matrix!r}")
        if self.matrix == "entries" and not self.matrix_entries:
            raise ConfigError("matrix = 'entries' needs matrix_entries")
        if self.d < 1:
            raise ConfigError("d must be >= 1")
        if self.s <= self.d / 2:
            raise ConfigError(f"need s > d/2 (s = {self.s}, d = {self.d})")
        if not 3 * self.delta < self.gamma:
            raise ConfigError("need 3 delta < gamma")
        if not 0 < self.delta < 0.25:
            raise ConfigError("need 0 < delta < 1/4")
        if not 0 < self.theta < 1:
            raise ConfigError("theta must lie in (0, 1)")
        if not 0 < self.c_d <= 2:
            raise ConfigError("c_d must lie in (0, 2]")
        if self.R < 1:
            raise ConfigError("R must be >= 1")
        if self.h <= 0 or any(x <= 0 for x in self.steps):
            raise ConfigError("step sizes must be positive")
        if self.t1 <= self.t0:
            raise ConfigError("need t0 < t1")
        if self.Nx < 2 or self.Nx & (self.Nx - 1):
            raise ConfigError("Nx must be a power of two")
        if self.L <= 0:
            raise ConfigError("L must be positive")
        if self.stride < 1 or self.samples < 0 or self.n_xi < 1:
            raise ConfigError("stride and n_xi must be >= 1, samples >= 0")
        if self.fixture not in (None, "record", "compare"):
            raise ConfigError("fixture must be 'record', 'compare' or null")
        if self.fixture is not None and not self.fixture_dir:
            raise ConfigError("fixture mode needs fixture_dir")
        if self.alpha0_constant is not None and self.alpha0_constant <= 0:
            raise ConfigError("alpha0_constant must be positive")
        for m in self.data_modes:
            if len(m) != self.d:
                raise ConfigError(f"data mode {m} does not have d = {self.d} entries")

    def dispersion_matrix(self) -> DispersionMatrix:
        if self.matrix == "golden":
            if self.d != 2:
                raise ConfigError("the golden preset is two-dimensional")
            return DispersionMatrix.golden(tau=self.tau or 3.0)
        if self.matrix == "identity":
            return DispersionMatrix.identity(self.d)
        if self.matrix == "random":
            return DispersionMatrix.random(self.d, self.matrix_seed, tau=self.tau)
        ent = np.asarray(self.matrix_entries, dtype=float)
        if ent.shape != (self.d, self.d):
            raise ConfigError(f"matrix_entries must be {self.d} x {self.d}")
        try:
            return DispersionMatrix(ent, tau=self.tau or self.d * (self.d + 1) / 2 + 1)
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def to_dict(self) -> dict:
        return asdict(self)


# scenario-specific defaults, applied before the config file and overrides
SCENARIO_DEFAULTS: dict[str, dict[str, Any]] = {
    "admissibility-scan": {"R": 32, "radii": [8, 16, 32]},
    "cluster-report": {"R": 64, "radii": [64, 128]},
    "resonance-census": {"R": 20, "radii": [20]},
    "divisor-ledger": {"R": 32, "radii": [32, 64], "samples": 200_000},
    "effective-run": {"R": 8, "alpha0_constant": 4.0, "theta": 0.3, "t0": 1.0, "t1": 10.0},
    "full-vs-effective": {"R": 8, "alpha0_constant": 4.0, "theta": 0.3, "t0": 1.0, "t1": 10.0},
    "nls-run": {
        "R": 3,
        "L": 200.0,
        "Nx": 4096,
        "t0": 0.0,
        "t1": 40.0,
        "h": 0.02,
        "record_times": [0, 1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 25, 30, 35, 40],
    },
    "scattering-compare": {
        "R": 3,
        "L": 200.0,
        "Nx": 4096,
        "t0": 0.0,
        "t1": 40.0,
        "h": 0.02,
        "record_times": [1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 25, 30, 35, 40],
        "fit_window": [5.0, 40.0],
    },
    "dispersive-check": {"L": 3000.0, "Nx": 65536, "d": 1, "s": 1.0, "data_modes": [[0]], "matrix": "identity"},
}


def _coerce(name: str, raw: str) -> Any:
    """Parse an override value: JSON if it parses, else the bare string."""
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def load_config(scenario: str, path: str | Path | None = None, overrides: list[str] | None = None) -> ExperimentConfig:
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {', '.join(SCENARIOS)}")
    data: dict[str, Any] = dict(SCENARIO_DEFAULTS.get(scenario, {}))
    if path is not None:
        try:
            with open(path) as fh:
                loaded = json.load(fh)
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"config {path} is not valid JSON: {e}") from e
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        if loaded.get("scenario", scenario) != scenario:
            raise ConfigError(f"config is for scenario {loaded['scenario']!r}, not {scenario!r}")
        data.update(loaded)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        k, v = item.split("=", 1)
        data[k.strip()] = _coerce(k, v.strip())
    data["scenario"] = scenario
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    try:
        cfg = ExperimentConfig(**data)
    except TypeError as e:
        raise ConfigError(str(e)) from e
    for key in ("t0", "t1", "h", "L", "s", "sigma", "delta", "gamma", "theta", "c_d", "eps", "amplitude"):
        v = getattr(cfg, key)
        if not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"{key} must be a finite number")
    return cfg

"""Run configuration: plain-text config files plus CLI overrides.

Config files are flat ``key = value`` INI sections::

    [run]
    source = kinematic
    scheme = pi
    seed = 0
    out = reports

    [gbt]
    rounds = 300
    lr = 0.1
    depth = 6
    min_samples_leaf = 5
    subsample = 1.0

    [vehicles]
    small = 0.345, 37.77, 28.84

    [variables]
    N_f = M L T^-2

    [grid.kinematic]
    v_i = 0.1, 5.0, 50

Every key has a built-in default, so an empty (or absent) file is a valid
configuration.  CLI flags override file values.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .dataset import DEFAULT_VEHICLES, KINEMATIC_GRID, SURROGATE_GRID
from .dimensions import VariableDecl, variables_from_config
from .gbt import GbtConfig
from .simulator import VehicleSpec

DEFAULT_FRACTIONS = (0.05, 0.1, 0.2, 0.4, 0.8, 1.0)


@dataclass
class RunConfig:
    vehicles: dict[str, VehicleSpec] = field(default_factory=lambda: dict(DEFAULT_VEHICLES))
    source: str = "kinematic"
    scheme: str = "pi"
    seed: int = 0
    out_dir: Path = Path("reports")
    gbt: GbtConfig = field(default_factory=GbtConfig)
    fractions: tuple[float, ...] = DEFAULT_FRACTIONS
    repeats: int = 5
    target_vehicle: str = "large"
    target_output: str = "Y"
    kinematic_grid: dict = field(default_factory=lambda: dict(KINEMATIC_GRID))
    surrogate_grid: dict = field(default_factory=lambda: dict(SURROGATE_GRID))
    variables: list[VariableDecl] = field(default_factory=list)

    @property
    def data_dir(self) -> Path:
        return self.out_dir / "data"

    def grid_for(self, source: str) -> dict:
        return self.kinematic_grid if source == "kinematic" else self.surrogate_grid


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(",", " ").split())


def _axis_triplet(text: str) -> tuple[float, float, int]:
    vals = text.replace(",", " ").split()
    if len(vals) != 3:
        raise ValueError(f"grid axis needs 'start, stop, count', got {text!r}")
    return (float(vals[0]), float(vals[1]), int(vals[2]))


def parse_vehicles(section: dict[str, str]) -> dict[str, VehicleSpec]:
    out = {}
    for name, text in section.items():
        vals = _floats(text)
        if len(vals) != 3:
            raise ValueError(f"vehicle {name!r} needs 'l, Nf, Nr', got {text!r}")
        out[name] = VehicleSpec(name, *vals)
    return out


def load_run_config(path: str | Path | None = None) -> RunConfig:
    """Read a config file into a RunConfig; missing keys keep their defaults."""
    cfg = RunConfig()
    if path is None:
        return cfg
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep case: variable and vehicle names matter
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(f"config file not found: {path}")

    if parser.has_section("run"):
        run = parser["run"]
        cfg.source = run.get("source", cfg.source)
        cfg.scheme = run.get("scheme", cfg.scheme)
        cfg.seed = run.getint("seed", cfg.seed)
        cfg.out_dir = Path(run.get("out", str(cfg.out_dir)))
    if parser.has_section("gbt"):
        g = parser["gbt"]
        cfg.gbt = GbtConfig(
            n_rounds=g.getint("rounds", cfg.gbt.n_rounds),
            learning_rate=g.getfloat("lr", cfg.gbt.learning_rate),
            max_depth=g.getint("depth", cfg.gbt.max_depth),
            min_samples_leaf=g.getint("min_samples_leaf", cfg.gbt.min_samples_leaf),
            subsample=g.getfloat("subsample", cfg.gbt.subsample),
            seed=g.getint("seed", cfg.gbt.seed),
        )
    if parser.has_section("vehicles"):
        cfg.vehicles = parse_vehicles(dict(parser["vehicles"]))
    if parser.has_section("curve"):
        c = parser["curve"]
        if "fractions" in c:
            cfg.fractions = _floats(c["fractions"])
        cfg.repeats = c.getint("repeats", cfg.repeats)
    if parser.has_section("compare"):
        c = parser["compare"]
        cfg.target_vehicle = c.get("target", cfg.target_vehicle)
        cfg.target_output = c.get("output", cfg.target_output)
    if parser.has_section("grid.kinematic"):
        for key, text in parser["grid.kinematic"].items():
            cfg.kinematic_grid[key] = _axis_triplet(text)
    if parser.has_section("grid.surrogate"):
        for key, text in parser["grid.surrogate"].items():
            if key in ("mu", "delta"):
                cfg.surrogate_grid[key] = _floats(text)
            else:
                cfg.surrogate_grid[key] = _axis_triplet(text)
    if parser.has_section("variables"):
        cfg.variables = variables_from_config(dict(parser["variables"]))
    return cfg

"""Maneuver datasets: input grids, simulation runs, persistence, splits.

The kinematic grid is the full Cartesian product of 50 initial speeds x
10 braking levels x 11 steering angles (5500 maneuvers per vehicle); the
surrogate grid covers 3 friction coefficients x 6 speeds x 10 braking
levels x 3 steering angles (540 per vehicle).  Grid axes are generated by
index arithmetic from their endpoints, never by repeated float addition.

Records persist to plain CSV (UTF-8, comma separated, mandatory header);
float fields round-trip exactly through ``repr``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .simulator import (
    DEFAULT_STEP,
    STANDARD_GRAVITY,
    FinalPose,
    ManeuverInput,
    VehicleSpec,
    calibrate_step,
    simulate_kinematic_batch,
    simulate_surrogate_batch,
)

SOURCES = ("kinematic", "surrogate")

CSV_HEADER = [
    "vehicle", "v_i", "a", "delta", "mu", "g", "l", "Nf", "Nr", "X", "Y", "theta", "source",
]

DEFAULT_VEHICLES = {
    "small": VehicleSpec("small", wheelbase_l=0.345, front_normal_Nf=37.77, rear_normal_Nr=28.84),
    "long": VehicleSpec("long", wheelbase_l=0.853, front_normal_Nf=22.74, rear_normal_Nr=52.89),
    "large": VehicleSpec("large", wheelbase_l=0.475, front_normal_Nf=71.12, rear_normal_Nr=71.12),
}

KINEMATIC_GRID = {
    "v_i": (0.1, 5.0, 50),
    "a_g": (0.1, 1.0, 10),  # deceleration magnitude in multiples of g
    "delta": (0.0, 0.7854, 11),
}

SURROGATE_GRID = {
    "mu": (0.2, 0.4, 0.9),
    "v_i": (1.0, 3.5, 6),
    "a_g": (0.1, 1.0, 10),
    "delta": (0.0, 0.3927, 0.7854),
}


@dataclass(frozen=True)
class ManeuverRecord:
    """One simulated maneuver: vehicle, inputs, and resulting final pose."""

    vehicle: VehicleSpec
    inputs: ManeuverInput
    outcome: FinalPose
    source: str

    def key(self) -> tuple:
        """Identity of the underlying experiment, for leakage audits."""
        return (self.vehicle.name, self.inputs.v_i, self.inputs.a, self.inputs.delta, self.inputs.mu)


@dataclass
class Dataset:
    """An immutable collection of maneuver records from a single source."""

    records: tuple[ManeuverRecord, ...]
    provenance: str = ""
    seed: int | None = None
    _cols: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.records = tuple(self.records)
        sources = {r.source for r in self.records}
        if len(sources) > 1:
            raise ValueError(f"dataset mixes sources {sorted(sources)}")
        if sources and next(iter(sources)) not in SOURCES:
            raise ValueError(f"unknown source {sources!r}")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[ManeuverRecord]:
        return iter(self.records)

    @property
    def source(self) -> str:
        if not self.records:
            raise ValueError("empty dataset has no source")
        return self.records[0].source

    def vehicles(self) -> list[str]:
        seen = dict.fromkeys(r.vehicle.name for r in self.records)
        return list(seen)

    def columns(self) -> dict[str, np.ndarray]:
        """Record fields as numpy columns (cached; do not mutate)."""
        if self._cols is None:
            recs = self.records
            self._cols = {
                "v_i": np.array([r.inputs.v_i for r in recs]),
                "a": np.array([r.inputs.a for r in recs]),
                "delta": np.array([r.inputs.delta for r in recs]),
                "mu": np.array([np.nan if r.inputs.mu is None else r.inputs.mu for r in recs]),
                "g": np.array([r.inputs.g for r in recs]),
                "l": np.array([r.vehicle.wheelbase_l for r in recs]),
                "Nf": np.array([r.vehicle.front_normal_Nf for r in recs]),
                "Nr": np.array([r.vehicle.rear_normal_Nr for r in recs]),
                "X": np.array([r.outcome.X for r in recs]),
                "Y": np.array([r.outcome.Y for r in recs]),
                "theta": np.array([r.outcome.theta for r in recs]),
            }
        return self._cols


def _axis(start: float, stop: float, count: int) -> np.ndarray:
    return np.linspace(start, stop, count)


def kinematic_grid(
    vehicle: VehicleSpec, step: float | None = None, grid: dict | None = None
) -> Dataset:
    """Simulate the full 5500-point braking grid for one vehicle.

    Axis order (outer to inner): v_i, deceleration level, steering angle.
    The RK4 step is calibrated against the analytic oracle unless given.
    """
    if step is None:
        step = calibrate_step(vehicle)
    grid = grid or KINEMATIC_GRID
    v_vals = _axis(*grid["v_i"])
    a_vals = -STANDARD_GRAVITY * _axis(*grid["a_g"])
    d_vals = _axis(*grid["delta"])
    vv, aa, dd = np.meshgrid(v_vals, a_vals, d_vals, indexing="ij")
    v_flat, a_flat, d_flat = vv.ravel(), aa.ravel(), dd.ravel()
    X, Y, TH = simulate_kinematic_batch(vehicle.wheelbase_l, v_flat, a_flat, d_flat, step)
    records = tuple(
        ManeuverRecord(
            vehicle,
            ManeuverInput(v_i=float(v_flat[i]), a=float(a_flat[i]), delta=float(d_flat[i])),
            FinalPose(float(X[i]), float(Y[i]), float(TH[i])),
            "kinematic",
        )
        for i in range(len(v_flat))
    )
    return Dataset(records, provenance=f"kinematic grid, vehicle={vehicle.name}, step={step}")


def surrogate_grid(
    vehicle: VehicleSpec, seed: int, step: float = DEFAULT_STEP, grid: dict | None = None
) -> Dataset:
    """Simulate the 540-point friction-limited grid for one vehicle.

    Axis order (outer to inner): mu, v_i, deceleration level, steering angle.
    Deceleration levels are stored as negative (braking) values.
    """
    grid = grid or SURROGATE_GRID
    mu_vals = np.array(grid["mu"])
    v_vals = _axis(*grid["v_i"])
    a_vals = -STANDARD_GRAVITY * _axis(*grid["a_g"])
    d_vals = np.array(grid["delta"])
    mm, vv, aa, dd = np.meshgrid(mu_vals, v_vals, a_vals, d_vals, indexing="ij")
    m_flat, v_flat, a_flat, d_flat = mm.ravel(), vv.ravel(), aa.ravel(), dd.ravel()
    g_flat = np.full(len(v_flat), STANDARD_GRAVITY)
    X, Y, TH = simulate_surrogate_batch(
        vehicle, m_flat, v_flat, a_flat, d_flat, g_flat, seed, step=step
    )
    records = tuple(
        ManeuverRecord(
            vehicle,
            ManeuverInput(
                v_i=float(v_flat[i]), a=float(a_flat[i]), delta=float(d_flat[i]), mu=float(m_flat[i])
            ),
            FinalPose(float(X[i]), float(Y[i]), float(TH[i])),
            "surrogate",
        )
        for i in range(len(v_flat))
    )
    return Dataset(records, provenance=f"surrogate grid, vehicle={vehicle.name}, seed={seed}", seed=seed)


def split(d: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Disjoint, exhaustive, seeded-shuffle partition into (train, test)."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n = len(d)
    n_train = int(round(train_fraction * n))
    perm = np.random.default_rng(seed).permutation(n)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    train = Dataset(
        tuple(d.records[i] for i in train_idx),
        provenance=f"{d.provenance} [train {train_fraction} seed {seed}]",
        seed=d.seed,
    )
    test = Dataset(
        tuple(d.records[i] for i in test_idx),
        provenance=f"{d.provenance} [test {1 - train_fraction} seed {seed}]",
        seed=d.seed,
    )
    return train, test


def merge(datasets: Sequence[Dataset]) -> Dataset:
    """Concatenate datasets of the same source kind, keeping record order."""
    if not datasets:
        raise ValueError("nothing to merge")
    kinds = {d.source for d in datasets}
    if len(kinds) > 1:
        raise ValueError(f"cannot merge mixed sources {sorted(kinds)}")
    records = tuple(r for d in datasets for r in d.records)
    provenance = " + ".join(d.provenance for d in datasets)
    return Dataset(records, provenance=f"merged({provenance})")


def save_csv(d: Dataset, path: str | Path) -> Path:
    """Write records to CSV; floats are written with full `repr` precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in d.records:
            w.writerow(
                [
                    r.vehicle.name,
                    repr(r.inputs.v_i),
                    repr(r.inputs.a),
                    repr(r.inputs.delta),
                    "" if r.inputs.mu is None else repr(r.inputs.mu),
                    repr(r.inputs.g),
                    repr(r.vehicle.wheelbase_l),
                    repr(r.vehicle.front_normal_Nf),
                    repr(r.vehicle.rear_normal_Nr),
                    repr(r.outcome.X),
                    repr(r.outcome.Y),
                    repr(r.outcome.theta),
                    r.source,
                ]
            )
    return path


def load_csv(path: str | Path) -> Dataset:
    """Read a dataset written by :func:`save_csv`; round-trips bit-exactly."""
    path = Path(path)
    vehicles: dict[tuple, VehicleSpec] = {}
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header in {path}: {header}")
        for row in reader:
            (name, v_i, a, delta, mu, g, l, nf, nr, x, y, theta, source) = row
            vkey = (name, l, nf, nr)
            if vkey not in vehicles:
                vehicles[vkey] = VehicleSpec(name, float(l), float(nf), float(nr))
            records.append(
                ManeuverRecord(
                    vehicles[vkey],
                    ManeuverInput(
                        v_i=float(v_i),
                        a=float(a),
                        delta=float(delta),
                        mu=None if mu == "" else float(mu),
                        g=float(g),
                    ),
                    FinalPose(float(x), float(y), float(theta)),
                    source,
                )
            )
    return Dataset(tuple(records), provenance=f"loaded from {path.name}")


def generate(
    vehicles: Iterable[VehicleSpec], source: str, seed: int = 0, grid: dict | None = None
) -> dict[str, Dataset]:
    """Build the per-vehicle grid datasets for one source kind."""
    if source == "kinematic":
        return {v.name: kinematic_grid(v, grid=grid) for v in vehicles}
    if source == "surrogate":
        return {v.name: surrogate_grid(v, seed, grid=grid) for v in vehicles}
    raise ValueError(f"unknown source {source!r}")

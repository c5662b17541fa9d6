"""The three studies: MAE matrices, learning curves, preprocessing comparison.

A *matrix run* trains one model per vehicle plus one on the merged training
data, then scores every vehicle's held-out test set against all four models.
Cells are labeled self (model trained on the test vehicle's own training
data), cross (trained solely on another vehicle), or shared (trained on the
merged data).  All errors are mean absolute errors in physical units;
predictions made in dimensionless space are rescaled by the test vehicle's
wheelbase first.

Every matrix run performs a leakage audit: no test record identity may
appear in any model's training data.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import gbt
from .dataset import Dataset, merge, split
from .features import Pipeline, SCHEME_NAMES, make_pipeline
from .gbt import Ensemble, GbtConfig
from .simulator import FinalPose

MERGED = "MERGED"

KINDS = ("self", "cross", "shared")

OUTPUT_COLUMNS = {"X": 0, "Y": 1, "theta": 2}

TRAIN_FRACTION = 0.8


@dataclass(frozen=True)
class PredictionCell:
    """MAE of one (model, test vehicle) pairing."""

    model_vehicle: str
    data_vehicle: str
    mae_x: float
    mae_y: float
    mae_theta: float
    kind: str

    def __post_init__(self):
        expected = (
            "shared"
            if self.model_vehicle == MERGED
            else "self"
            if self.model_vehicle == self.data_vehicle
            else "cross"
        )
        if self.kind != expected:
            raise ValueError(
                f"cell ({self.model_vehicle}, {self.data_vehicle}) must be kind {expected!r}"
            )

    def maes(self) -> tuple[float, float, float]:
        return (self.mae_x, self.mae_y, self.mae_theta)


@dataclass
class ExperimentReport:
    """All cells of one matrix run plus per-kind summary means."""

    scheme: str
    source: str
    cells: list[PredictionCell]
    summary: dict[str, tuple[float, float, float]]
    config: GbtConfig
    seed: int
    leakage_ok: bool
    notes: str = ""

    def cell(self, model_vehicle: str, data_vehicle: str) -> PredictionCell:
        for c in self.cells:
            if c.model_vehicle == model_vehicle and c.data_vehicle == data_vehicle:
                return c
        raise KeyError((model_vehicle, data_vehicle))

    def kind_cells(self, kind: str) -> list[PredictionCell]:
        return [c for c in self.cells if c.kind == kind]


def mae(
    actual: Sequence[FinalPose] | np.ndarray, predicted: Sequence[FinalPose] | np.ndarray
) -> tuple[float, float, float]:
    """Per-output mean absolute error between two equal-length pose lists."""
    a = _pose_array(actual)
    p = _pose_array(predicted)
    if a.shape != p.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {p.shape}")
    if a.shape[0] == 0:
        raise ValueError("empty pose lists")
    err = np.abs(a - p).mean(axis=0)
    return (float(err[0]), float(err[1]), float(err[2]))


def _pose_array(poses) -> np.ndarray:
    if isinstance(poses, np.ndarray):
        arr = np.asarray(poses, dtype=float)
    else:
        arr = np.array([(p.X, p.Y, p.theta) for p in poses], dtype=float).reshape(-1, 3)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"expected (n, 3) poses, got {arr.shape}")
    return arr


def audit_no_leakage(
    train_by_model: Mapping[str, Dataset], test_by_vehicle: Mapping[str, Dataset]
) -> list[tuple[str, str]]:
    """Return every (model, test vehicle) pair whose data overlaps."""
    violations = []
    train_keys = {m: {r.key() for r in d} for m, d in train_by_model.items()}
    for v, test in test_by_vehicle.items():
        test_keys = {r.key() for r in test}
        for m, keys in train_keys.items():
            if keys & test_keys:
                violations.append((m, v))
    return violations


def _fit_model(scheme: str, train: Dataset, cfg: GbtConfig) -> tuple[Pipeline, tuple[Ensemble, ...]]:
    pipe = make_pipeline(scheme).fit(train)
    x = pipe.input_matrix(train)
    y = pipe.target_matrix(train)
    return pipe, gbt.fit_multi(x, y, cfg)


def _predict_physical(
    pipe: Pipeline, ensembles: Sequence[Ensemble], test: Dataset
) -> np.ndarray:
    x = pipe.input_matrix(test)
    pred = np.column_stack([e.predict(x) for e in ensembles])
    return pipe.inverse_targets(pred, test)


def _actual_pose(test: Dataset) -> np.ndarray:
    c = test.columns()
    return np.column_stack([c["X"], c["Y"], c["theta"]])


def run_matrix(
    datasets: Mapping[str, Dataset],
    scheme: str,
    cfg: GbtConfig = GbtConfig(),
    seed: int = 0,
) -> ExperimentReport:
    """Train per-vehicle and merged models; score all test sets on all models."""
    names = list(datasets)
    if not names:
        raise ValueError("no datasets given")
    source = datasets[names[0]].source
    trains: dict[str, Dataset] = {}
    tests: dict[str, Dataset] = {}
    for name, ds in datasets.items():
        trains[name], tests[name] = split(ds, TRAIN_FRACTION, seed)
    train_by_model = dict(trains)
    train_by_model[MERGED] = merge(list(trains.values()))

    violations = audit_no_leakage(train_by_model, tests)
    if violations:
        raise RuntimeError(f"train/test leakage detected in cells {violations}")

    models = {m: _fit_model(scheme, d, cfg) for m, d in train_by_model.items()}

    cells = []
    for model_name, (pipe, ensembles) in models.items():
        for data_name, test in tests.items():
            kind = (
                "shared"
                if model_name == MERGED
                else "self"
                if model_name == data_name
                else "cross"
            )
            predicted = _predict_physical(pipe, ensembles, test)
            mx, my, mth = mae(_actual_pose(test), predicted)
            cells.append(PredictionCell(model_name, data_name, mx, my, mth, kind))

    summary = {
        kind: tuple(
            float(np.mean([c.maes()[j] for c in cells if c.kind == kind])) for j in range(3)
        )
        for kind in KINDS
    }
    notes = "single shared learner config across schemes; comparisons isolate the preprocessing"
    return ExperimentReport(scheme, source, cells, summary, cfg, seed, leakage_ok=True, notes=notes)


@dataclass
class CurvePoint:
    fraction: float
    mae_x: float
    mae_y: float
    mae_theta: float


def learning_curve(
    datasets: Mapping[str, Dataset],
    scheme: str,
    vehicle: str,
    fractions: Sequence[float],
    repeats: int = 5,
    cfg: GbtConfig = GbtConfig(),
    seed: int = 0,
) -> list[CurvePoint]:
    """Self-prediction MAE vs training-set fraction, averaged over repeats.

    The 80/20 split is fixed by ``seed``; each (fraction, repeat) draws its
    own seeded subset of the training split.  At fraction 1.0 every repeat
    uses the whole training split, matching the matrix run's self cell.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    if any(not 0.0 < f <= 1.0 for f in fractions):
        raise ValueError("fractions must lie in (0, 1]")
    train, test = split(datasets[vehicle], TRAIN_FRACTION, seed)
    actual = _actual_pose(test)
    points = []
    for fi, frac in enumerate(fractions):
        maes = np.zeros((repeats, 3))
        for rep in range(repeats):
            if frac >= 1.0:
                sub = train
            else:
                m = int(round(frac * len(train)))
                if m < 2 * cfg.min_samples_leaf:
                    raise ValueError(
                        f"fraction {frac} keeps {m} rows; need >= {2 * cfg.min_samples_leaf}"
                    )
                rng = np.random.default_rng([seed, fi, rep])
                idx = np.sort(rng.choice(len(train), size=m, replace=False))
                sub = Dataset(
                    tuple(train.records[i] for i in idx),
                    provenance=f"{train.provenance} [lc {frac} rep {rep}]",
                    seed=train.seed,
                )
            pipe, ensembles = _fit_model(scheme, sub, cfg)
            maes[rep] = mae(actual, _predict_physical(pipe, ensembles, test))
        mx, my, mth = maes.mean(axis=0)
        points.append(CurvePoint(float(frac), float(mx), float(my), float(mth)))
    return points


@dataclass
class ComparativeStudy:
    """MAE of one output of one target vehicle under every scheme and source."""

    target_vehicle: str
    output: str
    source: str
    training_sources: list[str]
    rows: dict[str, dict[str, float]] = field(default_factory=dict)

    def value(self, scheme: str, training_source: str) -> float:
        return self.rows[scheme][training_source]

    def transfer_mae(self, scheme: str) -> float:
        """Mean MAE over the single-other-vehicle training sources."""
        others = [s for s in self.training_sources if s not in ("own", "merged")]
        return float(np.mean([self.rows[scheme][s] for s in others]))


def comparative_study(
    datasets: Mapping[str, Dataset],
    target_vehicle: str,
    output: str = "Y",
    cfg: GbtConfig = GbtConfig(),
    seed: int = 0,
    schemes: Sequence[str] = SCHEME_NAMES,
) -> ComparativeStudy:
    """Single-output study across schemes x training sources.

    Training sources are the target's own training split, each other
    vehicle's training split, and the merged training data.  Only the
    requested output's ensemble is trained.
    """
    if output not in OUTPUT_COLUMNS:
        raise ValueError(f"output must be one of {list(OUTPUT_COLUMNS)}")
    if target_vehicle not in datasets:
        raise ValueError(f"unknown target vehicle {target_vehicle!r}")
    col = OUTPUT_COLUMNS[output]
    names = list(datasets)
    trains: dict[str, Dataset] = {}
    tests: dict[str, Dataset] = {}
    for name, ds in datasets.items():
        trains[name], tests[name] = split(ds, TRAIN_FRACTION, seed)
    test = tests[target_vehicle]
    actual = _actual_pose(test)[:, col]

    sources: dict[str, Dataset] = {"own": trains[target_vehicle]}
    for name in names:
        if name != target_vehicle:
            sources[name] = trains[name]
    sources["merged"] = merge(list(trains.values()))

    study = ComparativeStudy(
        target_vehicle=target_vehicle,
        output=output,
        source=datasets[names[0]].source,
        training_sources=list(sources),
    )
    for scheme in schemes:
        row = {}
        for label, train_ds in sources.items():
            pipe = make_pipeline(scheme).fit(train_ds)
            x = pipe.input_matrix(train_ds)
            y = pipe.target_matrix(train_ds)[:, col]
            ens = gbt.fit(x, y, replace(cfg, seed=cfg.seed + col))
            pred = ens.predict(pipe.input_matrix(test))
            physical = pred * pipe.target_scale(test)[:, col]
            row[label] = float(np.mean(np.abs(actual - physical)))
        study.rows[scheme] = row
    return study


def _fmt(v: float) -> str:
    return f"{v:.4f}"


def emit_matrix_report(report: ExperimentReport, directory: str | Path) -> tuple[Path, Path]:
    """Write matrix.csv (machine, full precision) and matrix.md (human)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    csv_path = directory / "matrix.csv"
    md_path = directory / "matrix.md"

    lines = ["model_vehicle,data_vehicle,kind,mae_x,mae_y,mae_theta"]
    for c in report.cells:
        lines.append(
            f"{c.model_vehicle},{c.data_vehicle},{c.kind},"
            f"{c.mae_x!r},{c.mae_y!r},{c.mae_theta!r}"
        )
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    vehicles = list(dict.fromkeys(c.data_vehicle for c in report.cells))
    models = list(dict.fromkeys(c.model_vehicle for c in report.cells))
    md = [
        f"# MAE matrix: scheme `{report.scheme}`, source `{report.source}`",
        "",
        f"Seed {report.seed}; learner {report.config}; X and Y in meters, theta in rad.",
        f"Note: {report.notes}.",
        "",
        "| Model \\ Data | " + " | ".join(vehicles) + " |",
        "|---" * (len(vehicles) + 1) + "|",
    ]
    for m in models:
        row = [f"**{m}**" if m == MERGED else m]
        for v in vehicles:
            c = report.cell(m, v)
            body = f"X {_fmt(c.mae_x)} / Y {_fmt(c.mae_y)} / theta {_fmt(c.mae_theta)}"
            row.append(f"**{body}**" if c.kind == "self" else body)
        md.append("| " + " | ".join(row) + " |")
    md += ["", "## Summary (mean MAE per prediction kind)", ""]
    md.append("| kind | X | Y | theta |")
    md.append("|---|---|---|---|")
    for kind in KINDS:
        s = report.summary[kind]
        md.append(f"| {kind} | {_fmt(s[0])} | {_fmt(s[1])} | {_fmt(s[2])} |")
    md_path.write_text("\n".join(md) + "\n", encoding="utf-8")
    return csv_path, md_path


def emit_curve_csv(points: Sequence[CurvePoint], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["fraction,mae_x,mae_y,mae_theta"]
    for p in points:
        lines.append(f"{p.fraction!r},{p.mae_x!r},{p.mae_y!r},{p.mae_theta!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def emit_comparative_csv(study: ComparativeStudy, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = ["scheme"] + study.training_sources
    lines = [",".join(header)]
    for scheme, row in study.rows.items():
        lines.append(",".join([scheme] + [repr(row[s]) for s in study.training_sources]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path

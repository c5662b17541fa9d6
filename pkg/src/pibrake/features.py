"""Preprocessing schemes mapping maneuver records to learner matrices.

Eight schemes are implemented, selectable by name:

================  ============================================================
baseline          raw physical inputs, raw pose targets
normalized        baseline divided per column by the max |value| seen in train
pca2 / pca3       baseline standardized and projected onto top-k components
augmented         baseline plus the initial yaw rate v_i tan(delta)/l
pi                dimensionless inputs and scaled targets (X/l, Y/l, theta)
pi-aug            pi plus handcrafted dimensionless ratios
pi-fillers        pi plus the redundant dimensional fillers v_i and l
================  ============================================================

Kinematic records expose 4 physical inputs (v_i, a, delta, l); surrogate
records expose 8 (mu, v_i, g, a, delta, N_f, N_r, l).  The dimensionless
input sets are (a l/v_i^2, delta) and (a l/v_i^2, delta, N_f/N_r, mu,
g l/v_i^2) respectively.  Predictions in pi space are mapped back to
physical units with the wheelbase of the *test* record's vehicle, so all
reported errors share physical units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, ManeuverRecord
from .dimensions import DegenerateRowError

LATERAL_RATIO_CAP = 1e3

SCHEME_NAMES = ("baseline", "normalized", "pca2", "pca3", "augmented", "pi", "pi-aug", "pi-fillers")

TARGET_NAMES = ("X", "Y", "theta")
PI_TARGET_NAMES = ("X/l", "Y/l", "theta")


@dataclass
class FeatureMatrix:
    """A rectangular block of per-record feature vectors with column names."""

    values: np.ndarray
    columns: list[str]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.columns):
            raise ValueError("feature matrix must be rectangular with one name per column")
        if not np.isfinite(self.values).all():
            raise ValueError("feature matrix contains non-finite entries")


def baseline_features(r: ManeuverRecord) -> list[float]:
    """Raw physical inputs of one record (source decides the column set)."""
    i, v = r.inputs, r.vehicle
    if r.source == "kinematic":
        return [i.v_i, i.a, i.delta, v.wheelbase_l]
    return [i.mu, i.v_i, i.g, i.a, i.delta, v.front_normal_Nf, v.rear_normal_Nr, v.wheelbase_l]


def augmented_features(r: ManeuverRecord) -> list[float]:
    """Baseline inputs plus the initial yaw rate v_i tan(delta)/l."""
    i, v = r.inputs, r.vehicle
    return baseline_features(r) + [i.v_i * math.tan(i.delta) / v.wheelbase_l]


def pi_features(r: ManeuverRecord) -> list[float]:
    """Dimensionless inputs of one record."""
    i, v = r.inputs, r.vehicle
    if i.v_i == 0:
        raise DegenerateRowError("v_i = 0 makes the dimensionless inputs singular")
    braking = i.a * v.wheelbase_l / i.v_i**2
    if r.source == "kinematic":
        return [braking, i.delta]
    return [
        braking,
        i.delta,
        v.front_normal_Nf / v.rear_normal_Nr,
        i.mu,
        i.g * v.wheelbase_l / i.v_i**2,
    ]


def pi_augmented_features(r: ManeuverRecord, cap: float = LATERAL_RATIO_CAP) -> list[float]:
    """Dimensionless inputs plus handcrafted ratios.

    Kinematic: the scaled initial yaw rate v_i^2 tan(delta)/(a l).  Surrogate:
    the longitudinal adherence ratio N_r mu g / ((N_f + N_r) |a|) and the
    lateral adherence ratio g mu l / (v_i^2 tan(delta)), the latter clipped to
    ``cap`` in magnitude (it diverges when driving straight).
    """
    i, v = r.inputs, r.vehicle
    if i.a == 0:
        raise ValueError("a = 0 makes the handcrafted ratios singular")
    base = pi_features(r)
    if r.source == "kinematic":
        return base + [i.v_i**2 * math.tan(i.delta) / (i.a * v.wheelbase_l)]
    longitudinal = (
        v.rear_normal_Nr * i.mu * i.g / ((v.front_normal_Nf + v.rear_normal_Nr) * abs(i.a))
    )
    tan_d = math.tan(i.delta)
    if tan_d == 0.0:
        lateral = cap
    else:
        lateral = i.g * i.mu * v.wheelbase_l / (i.v_i**2 * tan_d)
        lateral = max(-cap, min(cap, lateral))
    return base + [longitudinal, lateral]


def pi_fillers_features(r: ManeuverRecord) -> list[float]:
    """Dimensionless inputs plus the superfluous dimensional fillers v_i, l."""
    return pi_features(r) + [r.inputs.v_i, r.vehicle.wheelbase_l]


def _input_columns(source: str, scheme: str) -> list[str]:
    kin = source == "kinematic"
    base = (
        ["v_i", "a", "delta", "l"]
        if kin
        else ["mu", "v_i", "g", "a", "delta", "N_f", "N_r", "l"]
    )
    pi_cols = (
        ["a*l/v_i^2", "delta"]
        if kin
        else ["a*l/v_i^2", "delta", "N_f/N_r", "mu", "g*l/v_i^2"]
    )
    if scheme in ("baseline", "normalized", "pca2", "pca3"):
        return base
    if scheme == "augmented":
        return base + ["v_i*tan(delta)/l"]
    if scheme == "pi":
        return pi_cols
    if scheme == "pi-aug":
        if kin:
            return pi_cols + ["v_i^2*tan(delta)/(a*l)"]
        return pi_cols + ["N_r*mu*g/((N_f+N_r)*|a|)", "g*mu*l/(v_i^2*tan(delta))"]
    if scheme == "pi-fillers":
        return pi_cols + ["v_i", "l"]
    raise ValueError(f"unknown scheme {scheme!r}")


class MaxAbsNormalizer:
    """Per-column division by the largest |value| seen in the training data."""

    def __init__(self):
        self.divisors: np.ndarray | None = None

    def fit(self, train: FeatureMatrix) -> "MaxAbsNormalizer":
        if train.values.shape[0] == 0:
            raise ValueError("cannot fit a normalizer on an empty matrix")
        d = np.abs(train.values).max(axis=0)
        d[d == 0.0] = 1.0
        self.divisors = d
        return self

    def apply(self, m: FeatureMatrix) -> FeatureMatrix:
        if self.divisors is None:
            raise RuntimeError("normalizer used before fit")
        return FeatureMatrix(m.values / self.divisors, m.columns)


class PcaTransform:
    """Standardize columns and project onto the top-k principal components.

    Columns are centered and scaled to unit standard deviation (zero-variance
    columns pass through unscaled); components are eigenvectors of the
    covariance matrix sorted by descending eigenvalue, each oriented so its
    largest-magnitude loading is positive.
    """

    def __init__(self, k: int):
        self.k = k
        self.mean: np.ndarray | None = None
        self.scale: np.ndarray | None = None
        self.components: np.ndarray | None = None  # (p, k)
        self.explained_variance_ratio: np.ndarray | None = None

    def fit(self, train: FeatureMatrix) -> "PcaTransform":
        x = train.values
        n, p = x.shape
        if not 1 <= self.k <= p:
            raise ValueError(f"k must be in [1, {p}], got {self.k}")
        if n <= p:
            raise ValueError(f"PCA needs more rows ({n}) than columns ({p})")
        self.mean = x.mean(axis=0)
        std = x.std(axis=0)
        std[std == 0.0] = 1.0
        self.scale = std
        z = (x - self.mean) / self.scale
        cov = z.T @ z / (n - 1)
        eigval, eigvec = np.linalg.eigh(cov)
        order = np.argsort(eigval)[::-1]
        eigval, eigvec = eigval[order], eigvec[:, order]
        for j in range(p):
            lead = np.argmax(np.abs(eigvec[:, j]))
            if eigvec[lead, j] < 0:
                eigvec[:, j] = -eigvec[:, j]
        total = eigval.sum()
        self.explained_variance_ratio = eigval[: self.k] / (total if total > 0 else 1.0)
        self.components = eigvec[:, : self.k]
        return self

    def apply(self, m: FeatureMatrix) -> FeatureMatrix:
        if self.components is None:
            raise RuntimeError("PCA used before fit")
        z = (m.values - self.mean) / self.scale
        cols = [f"pc{j + 1}" for j in range(self.k)]
        return FeatureMatrix(z @ self.components, cols)


def fit_normalizer(train: FeatureMatrix) -> MaxAbsNormalizer:
    return MaxAbsNormalizer().fit(train)


def fit_pca(train: FeatureMatrix, k: int) -> PcaTransform:
    return PcaTransform(k).fit(train)


_ROW_FNS = {
    "baseline": baseline_features,
    "normalized": baseline_features,
    "pca2": baseline_features,
    "pca3": baseline_features,
    "augmented": augmented_features,
    "pi": pi_features,
    "pi-aug": pi_augmented_features,
    "pi-fillers": pi_fillers_features,
}

_PI_SCHEMES = ("pi", "pi-aug", "pi-fillers")


class Pipeline:
    """fit/transform/inverse bundle for one preprocessing scheme."""

    def __init__(self, scheme: str):
        if scheme not in SCHEME_NAMES:
            raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEME_NAMES}")
        self.scheme = scheme
        self._normalizer: MaxAbsNormalizer | None = None
        self._pca: PcaTransform | None = None

    @property
    def requires_fit(self) -> bool:
        return self.scheme in ("normalized", "pca2", "pca3")

    @property
    def dimensionless_targets(self) -> bool:
        return self.scheme in _PI_SCHEMES

    @property
    def target_names(self) -> tuple[str, ...]:
        return PI_TARGET_NAMES if self.dimensionless_targets else TARGET_NAMES

    def _raw_inputs(self, d: Dataset) -> FeatureMatrix:
        fn = _ROW_FNS[self.scheme]
        rows = [fn(r) for r in d.records]
        return FeatureMatrix(np.array(rows, dtype=float), _input_columns(d.source, self.scheme))

    def fit(self, train: Dataset) -> "Pipeline":
        if self.scheme == "normalized":
            self._normalizer = fit_normalizer(self._raw_inputs(train))
        elif self.scheme in ("pca2", "pca3"):
            self._pca = fit_pca(self._raw_inputs(train), k=int(self.scheme[-1]))
        return self

    def input_matrix(self, d: Dataset) -> FeatureMatrix:
        m = self._raw_inputs(d)
        if self.scheme == "normalized":
            if self._normalizer is None:
                raise RuntimeError("scheme 'normalized' must be fit before transform")
            return self._normalizer.apply(m)
        if self.scheme in ("pca2", "pca3"):
            if self._pca is None:
                raise RuntimeError(f"scheme {self.scheme!r} must be fit before transform")
            return self._pca.apply(m)
        return m

    def target_matrix(self, d: Dataset) -> np.ndarray:
        """(n, 3) learning targets: final pose, scaled by 1/l for pi schemes."""
        c = d.columns()
        y = np.column_stack([c["X"], c["Y"], c["theta"]])
        if self.dimensionless_targets:
            y = y.copy()
            y[:, 0] /= c["l"]
            y[:, 1] /= c["l"]
        return y

    def target_scale(self, d: Dataset) -> np.ndarray:
        """(n, 3) multipliers turning predicted targets into physical units."""
        n = len(d)
        scale = np.ones((n, 3))
        if self.dimensionless_targets:
            l = d.columns()["l"]
            scale[:, 0] = l
            scale[:, 1] = l
        return scale

    def inverse_targets(self, predictions: np.ndarray, d: Dataset) -> np.ndarray:
        """Map predicted targets back to physical units for the test records."""
        predictions = np.asarray(predictions, dtype=float)
        if predictions.shape != (len(d), 3):
            raise ValueError(f"expected predictions of shape {(len(d), 3)}, got {predictions.shape}")
        return predictions * self.target_scale(d)


def make_pipeline(scheme: str) -> Pipeline:
    return Pipeline(scheme)

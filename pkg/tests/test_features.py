import math

import numpy as np
import pytest

from pibrake.dataset import Dataset, ManeuverRecord
from pibrake.features import (
    FeatureMatrix,
    LATERAL_RATIO_CAP,
    MaxAbsNormalizer,
    PcaTransform,
    SCHEME_NAMES,
    augmented_features,
    baseline_features,
    fit_normalizer,
    fit_pca,
    make_pipeline,
    pi_augmented_features,
    pi_features,
    pi_fillers_features,
)
from pibrake.simulator import FinalPose, ManeuverInput, VehicleSpec

SMALL = VehicleSpec("small", 0.345, 37.77, 28.84)
LONG = VehicleSpec("long", 0.853, 22.74, 52.89)
LARGE = VehicleSpec("large", 0.475, 71.12, 71.12)


def kin_record(vehicle, v_i, a, delta, pose=(1.0, 0.2, 0.1)):
    return ManeuverRecord(vehicle, ManeuverInput(v_i, a, delta), FinalPose(*pose), "kinematic")


def dyn_record(vehicle, mu, v_i, a, delta, pose=(1.0, 0.2, 0.1), g=9.81):
    return ManeuverRecord(
        vehicle, ManeuverInput(v_i, a, delta, mu=mu, g=g), FinalPose(*pose), "surrogate"
    )


def test_baseline_vectors():
    r = kin_record(SMALL, 1.0, -0.981, 0.0)
    assert baseline_features(r) == [1.0, -0.981, 0.0, 0.345]
    d = dyn_record(LONG, 0.4, 2.0, -1.962, 0.3)
    assert baseline_features(d) == [0.4, 2.0, 9.81, -1.962, 0.3, 22.74, 52.89, 0.853]
    assert len(baseline_features(r)) == 4
    assert len(baseline_features(d)) == 8


def test_baseline_targets_are_raw_pose():
    pipe = make_pipeline("baseline")
    ds = Dataset((kin_record(SMALL, 1.0, -1.0, 0.1, pose=(0.5, 0.05, 0.02)),))
    y = pipe.target_matrix(ds)
    assert y.tolist() == [[0.5, 0.05, 0.02]]


def test_pi_features_values():
    r = kin_record(LONG, 2.0, -1.962, 0.3)
    got = pi_features(r)
    assert got[0] == pytest.approx(-1.962 * 0.853 / 4.0, rel=1e-12)  # -0.4183965
    assert got[1] == 0.3
    d = dyn_record(LARGE, 0.4, 2.0, -1.962, 0.3)
    vals = pi_features(d)
    assert vals == pytest.approx(
        [-1.962 * 0.475 / 4.0, 0.3, 1.0, 0.4, 9.81 * 0.475 / 4.0], rel=1e-12
    )


def test_pi_targets_scaled_by_wheelbase():
    pipe = make_pipeline("pi")
    ds = Dataset((kin_record(LONG, 2.0, -1.962, 0.3, pose=(0.0, 0.853, 0.1)),))
    y = pipe.target_matrix(ds)
    assert y[0, 0] == 0.0
    assert y[0, 1] == pytest.approx(1.0, rel=1e-12)
    assert y[0, 2] == 0.1


def test_pi_similarity_equal_inputs_across_vehicles():
    a_small = -3.0
    a_long = a_small * SMALL.wheelbase_l / LONG.wheelbase_l
    r1 = kin_record(SMALL, 2.0, a_small, 0.25)
    r2 = kin_record(LONG, 2.0, a_long, 0.25)
    assert pi_features(r1) == pi_features(r2)


def test_pi_augmented_kinematic():
    r = kin_record(SMALL, 2.0, -3.0, 0.0)
    assert pi_augmented_features(r)[-1] == 0.0  # tan 0 = 0
    r2 = kin_record(SMALL, 2.0, -3.0, 0.4)
    vecs = pi_augmented_features(r2)
    # cross-check: pi6 * pi4 = tan(delta)
    assert vecs[-1] * vecs[0] == pytest.approx(math.tan(0.4), rel=1e-12)


def test_pi_augmented_dynamic_ratios():
    # Nf = Nr on the large vehicle: ratio reduces to mu g / (2 |a|) * 2
    d = dyn_record(LARGE, 0.4, 2.0, -2 * 0.981, 0.3)
    vals = pi_augmented_features(d)
    longitudinal = vals[-2]
    assert longitudinal == pytest.approx(
        71.12 * 0.4 * 9.81 / ((71.12 + 71.12) * 1.962), rel=1e-12
    )
    assert longitudinal == pytest.approx(1.0, rel=1e-12)
    lateral = vals[-1]
    assert lateral == pytest.approx(9.81 * 0.4 * 0.475 / (4.0 * math.tan(0.3)), rel=1e-12)


def test_pi_augmented_lateral_cap_at_zero_steering():
    d = dyn_record(LARGE, 0.4, 2.0, -1.0, 0.0)
    assert pi_augmented_features(d)[-1] == LATERAL_RATIO_CAP
    tiny = dyn_record(LARGE, 1.4, 1.0, -1.0, 1e-9)
    assert pi_augmented_features(tiny)[-1] == LATERAL_RATIO_CAP


def test_pi_augmented_rejects_zero_deceleration():
    r = ManeuverRecord(SMALL, ManeuverInput(1.0, 0.0, 0.1), FinalPose(0, 0, 0), "kinematic")
    with pytest.raises(ValueError, match="a = 0"):
        pi_augmented_features(r)


def test_pi_fillers():
    r = kin_record(SMALL, 2.0, -3.0, 0.25)
    vals = pi_fillers_features(r)
    assert len(vals) == 4
    assert vals[-2:] == [2.0, 0.345]
    assert vals[:-2] == pi_features(r)
    # fillers break the cross-vehicle coincidence
    a_long = -3.0 * SMALL.wheelbase_l / LONG.wheelbase_l
    assert pi_fillers_features(kin_record(LONG, 2.0, a_long, 0.25)) != vals


def test_augmented_features():
    r = kin_record(SMALL, 2.0, -3.0, 0.0)
    vals = augmented_features(r)
    assert vals[-1] == 0.0
    assert len(vals) == len(baseline_features(r)) + 1
    r2 = kin_record(SMALL, 2.0, -3.0, 0.4)
    appended = augmented_features(r2)[-1]
    assert appended * SMALL.wheelbase_l / 2.0 == pytest.approx(math.tan(0.4), rel=1e-12)


def test_normalizer():
    m = FeatureMatrix(np.array([[1.0, 0.0], [-2.0, 0.0], [0.5, 0.0]]), ["a", "b"])
    norm = fit_normalizer(m)
    out = norm.apply(m)
    assert out.values[:, 0].tolist() == [0.5, -1.0, 0.25]
    assert out.values[:, 1].tolist() == [0.0, 0.0, 0.0]
    assert np.abs(out.values[:, 0]).max() == 1.0
    # test-time value beyond the training max is allowed to leave [-1, 1]
    probe = FeatureMatrix(np.array([[4.0, 1.0]]), ["a", "b"])
    assert norm.apply(probe).values[0, 0] == 2.0
    with pytest.raises(RuntimeError):
        MaxAbsNormalizer().apply(m)


def test_pca_full_rank_reconstruction():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(200, 4)) @ rng.normal(size=(4, 4))
    m = FeatureMatrix(x, list("abcd"))
    pca = fit_pca(m, k=4)
    z = pca.apply(m).values
    x_rec = (z @ pca.components.T) * pca.scale + pca.mean
    rms = np.sqrt(np.mean((x_rec - x) ** 2))
    assert rms <= 1e-10


def test_pca_line_in_2d():
    t = np.linspace(-1, 1, 50)
    m = FeatureMatrix(np.column_stack([t, 3 * t]), ["a", "b"])
    pca = fit_pca(m, k=1)
    assert pca.explained_variance_ratio[0] == pytest.approx(1.0, abs=1e-12)


def test_pca_validation_and_sign():
    m = FeatureMatrix(np.random.default_rng(1).normal(size=(50, 3)), list("abc"))
    with pytest.raises(ValueError):
        fit_pca(m, k=0)
    with pytest.raises(ValueError):
        fit_pca(m, k=4)
    with pytest.raises(RuntimeError):
        PcaTransform(2).apply(m)
    pca = fit_pca(m, k=3)
    for j in range(3):
        lead = np.argmax(np.abs(pca.components[:, j]))
        assert pca.components[lead, j] > 0


def test_pipeline_fit_required_only_for_stateful():
    ds = Dataset(tuple(kin_record(SMALL, 1.0 + i * 0.5, -1.0 - i, 0.1 * i) for i in range(6)))
    for scheme in ("baseline", "augmented", "pi", "pi-aug", "pi-fillers"):
        make_pipeline(scheme).input_matrix(ds)  # stateless: no fit needed
    with pytest.raises(RuntimeError, match="fit"):
        make_pipeline("normalized").input_matrix(ds)
    with pytest.raises(RuntimeError, match="fit"):
        make_pipeline("pca2").input_matrix(ds)
    got = make_pipeline("normalized").fit(ds).input_matrix(ds)
    assert np.abs(got.values).max() == 1.0


def test_unknown_scheme_rejected():
    with pytest.raises(ValueError, match="unknown scheme"):
        make_pipeline("autoencoder")


def _rescaled(r: ManeuverRecord, lam: float, tau: float, mass: float) -> ManeuverRecord:
    """The same physical experiment expressed in rescaled units."""
    i, v, o = r.inputs, r.vehicle, r.outcome
    force = mass * lam / tau**2
    vehicle = VehicleSpec(v.name, v.wheelbase_l * lam, v.front_normal_Nf * force, v.rear_normal_Nr * force)
    inputs = ManeuverInput(
        v_i=i.v_i * lam / tau,
        a=i.a * lam / tau**2,
        delta=i.delta,
        mu=i.mu,
        g=i.g * lam / tau**2,
    )
    pose = FinalPose(o.X * lam, o.Y * lam, o.theta)
    return ManeuverRecord(vehicle, inputs, pose, r.source)


@pytest.mark.parametrize("scheme", ["pi", "pi-aug", "pi-fillers"])
def test_pi_schemes_unit_rescale_invariance(scheme):
    rng = np.random.default_rng(3)
    for _ in range(20):
        r = dyn_record(
            LONG,
            float(rng.uniform(0.1, 1.0)),
            float(rng.uniform(0.5, 4.0)),
            -float(rng.uniform(0.5, 9.0)),
            float(rng.uniform(0.01, 0.7)),
        )
        lam, tau, mass = (float(rng.uniform(0.2, 5.0)) for _ in range(3))
        twin = _rescaled(r, lam, tau, mass)
        a = np.array(
            {"pi": pi_features, "pi-aug": pi_augmented_features, "pi-fillers": pi_fillers_features}[
                scheme
            ](r)
        )
        b = np.array(
            {"pi": pi_features, "pi-aug": pi_augmented_features, "pi-fillers": pi_fillers_features}[
                scheme
            ](twin)
        )
        if scheme == "pi-fillers":  # the fillers are dimensional by design
            a, b = a[:-2], b[:-2]
        np.testing.assert_allclose(b, a, rtol=1e-10)


def test_inverse_targets():
    ds = Dataset((kin_record(LARGE, 2.0, -3.0, 0.2),))
    pi_pipe = make_pipeline("pi")
    out = pi_pipe.inverse_targets(np.array([[2.0, 1.0, 0.3]]), ds)
    np.testing.assert_allclose(out, [[0.95, 0.475, 0.3]], rtol=1e-12)
    base_pipe = make_pipeline("baseline")
    raw = np.array([[2.0, 1.0, 0.3]])
    np.testing.assert_array_equal(base_pipe.inverse_targets(raw, ds), raw)
    with pytest.raises(ValueError, match="shape"):
        pi_pipe.inverse_targets(np.array([[1.0, 2.0]]), ds)


def test_inverse_round_trips_targets():
    ds = Dataset(
        tuple(
            kin_record(LONG, 1.0 + i, -2.0, 0.1, pose=(0.3 * i, 0.1 * i, 0.05 * i))
            for i in range(1, 5)
        )
    )
    pipe = make_pipeline("pi")
    y = pipe.target_matrix(ds)
    np.testing.assert_allclose(
        pipe.inverse_targets(y, ds),
        np.column_stack([ds.columns()["X"], ds.columns()["Y"], ds.columns()["theta"]]),
        rtol=1e-12,
    )


def test_features_match_dimension_engine():
    """Dual route: hand-coded features vs the pi-basis transform."""
    from pibrake.dimensions import (
        build_dimension_matrix,
        dynamic_variables,
        repeated_vars_pi_basis,
    )

    m = build_dimension_matrix(dynamic_variables())
    basis = repeated_vars_pi_basis(m, ["l", "v_i", "N_f"])
    r = dyn_record(LONG, 0.4, 2.5, -3.3, 0.2, pose=(1.1, 0.4, 0.3))
    row = {
        "X": r.outcome.X,
        "Y": r.outcome.Y,
        "theta": r.outcome.theta,
        "mu": r.inputs.mu,
        "v_i": r.inputs.v_i,
        "g": r.inputs.g,
        "a": r.inputs.a,
        "delta": r.inputs.delta,
        "N_f": r.vehicle.front_normal_Nf,
        "N_r": r.vehicle.rear_normal_Nr,
        "l": r.vehicle.wheelbase_l,
    }
    vals = pi_features(r)
    assert vals[0] == pytest.approx(basis.group_for("a").evaluate(row), rel=1e-12)
    assert vals[1] == pytest.approx(basis.group_for("delta").evaluate(row), rel=1e-12)
    # engine emits the axle ratio as N_r/N_f; the feature uses the reciprocal
    assert vals[2] == pytest.approx(1.0 / basis.group_for("N_r").evaluate(row), rel=1e-12)
    assert vals[3] == pytest.approx(basis.group_for("mu").evaluate(row), rel=1e-12)
    assert vals[4] == pytest.approx(basis.group_for("g").evaluate(row), rel=1e-12)
    pipe = make_pipeline("pi")
    ds = Dataset((r,))
    y = pipe.target_matrix(ds)[0]
    assert y[0] == pytest.approx(basis.group_for("X").evaluate(row), rel=1e-12)
    assert y[1] == pytest.approx(basis.group_for("Y").evaluate(row), rel=1e-12)
    assert y[2] == pytest.approx(basis.group_for("theta").evaluate(row), rel=1e-12)


def test_scheme_registry_complete():
    assert SCHEME_NAMES == ("baseline", "normalized", "pca2", "pca3", "augmented", "pi", "pi-aug", "pi-fillers")

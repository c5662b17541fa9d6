"""Final-pose simulation of constant-input braking maneuvers.

The vehicle follows the planar kinematic bicycle model with state
(X, Y, theta, v) and derivatives (v cos(theta), v sin(theta),
v tan(delta)/l, a), starting at the origin with speed v_i and braking at a
constant rate until v reaches zero.  Three generators are provided:

* ``simulate_kinematic``  -- fixed-step RK4 with the stop event (v = 0)
  resolved by linear interpolation inside the final step;
* ``analytic_arc_oracle`` -- closed-form reference: with constant inputs the
  path is a circular arc of radius l/tan(delta) and length v_i^2/(2|a|);
* ``simulate_dynamic_surrogate`` -- a synthetic friction-limited variant
  standing in for physical test data: commanded deceleration saturates at
  the rear-axle adherence limit, the turn radius widens when the lateral
  adherence limit is exceeded, and seeded Gaussian noise is added to the
  final pose.  It is a labeled stand-in, not calibrated to any real robot.

Batch variants integrate whole input grids in lockstep with numpy.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np

STANDARD_GRAVITY = 9.81

DEFAULT_STEP = 1e-3
SURROGATE_SIGMA_XY = 0.005
SURROGATE_SIGMA_THETA = 0.01


@dataclass(frozen=True)
class VehicleSpec:
    """Geometry and static axle loads of one car-like vehicle."""

    name: str
    wheelbase_l: float
    front_normal_Nf: float
    rear_normal_Nr: float

    def __post_init__(self):
        if self.wheelbase_l <= 0 or self.front_normal_Nf <= 0 or self.rear_normal_Nr <= 0:
            raise ValueError(f"vehicle {self.name!r}: l, Nf, Nr must all be positive")


@dataclass(frozen=True)
class ManeuverInput:
    """Constant control inputs and environment for one braking maneuver."""

    v_i: float
    a: float
    delta: float
    mu: float | None = None
    g: float = STANDARD_GRAVITY

    def __post_init__(self):
        if not self.v_i > 0:
            raise ValueError(f"initial speed must be positive, got {self.v_i}")
        if not abs(self.delta) < math.pi / 2:
            raise ValueError(f"steering angle must satisfy |delta| < pi/2, got {self.delta}")
        if not self.g > 0:
            raise ValueError(f"gravity must be positive, got {self.g}")


@dataclass(frozen=True)
class FinalPose:
    """Pose of the vehicle once it has come to rest."""

    X: float
    Y: float
    theta: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.X, self.Y, self.theta)):
            raise ValueError(f"non-finite final pose {(self.X, self.Y, self.theta)}")


def _require_braking(a: float) -> None:
    if not a < 0:
        raise ValueError(f"maneuver never terminates: deceleration must be negative, got a={a}")


def _integrate_kinematic(
    l: float, v_i: float, a: float, delta: float, step: float
) -> tuple[float, float, float, float]:
    """RK4 trajectory until v crosses 0; returns (X, Y, theta, terminal speed)."""
    tl = math.tan(delta) / l
    x = y = th = 0.0
    v = v_i
    h = step
    while True:
        if v + a * h <= 0.0:
            h = -v / a  # linear in time: the zero crossing is exact
        k1x, k1y, k1t = v * math.cos(th), v * math.sin(th), v * tl
        v2 = v + 0.5 * h * a
        th2 = th + 0.5 * h * k1t
        k2x, k2y, k2t = v2 * math.cos(th2), v2 * math.sin(th2), v2 * tl
        th3 = th + 0.5 * h * k2t
        k3x, k3y, k3t = v2 * math.cos(th3), v2 * math.sin(th3), v2 * tl
        v4 = v + h * a
        th4 = th + h * k3t
        k4x, k4y, k4t = v4 * math.cos(th4), v4 * math.sin(th4), v4 * tl
        x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        th += h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t)
        v += h * a
        if h < step:
            break
        if v <= 0.0:
            break
    if 0.0 < v < 1e-12:
        v = 0.0
    return x, y, th, v


def simulate_kinematic(
    vehicle: VehicleSpec, m: ManeuverInput, step: float = DEFAULT_STEP
) -> FinalPose:
    """Integrate one braking maneuver with RK4 until the vehicle stops."""
    _require_braking(m.a)
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    x, y, th, _ = _integrate_kinematic(vehicle.wheelbase_l, m.v_i, m.a, m.delta, step)
    return FinalPose(x, y, th)


def analytic_arc_oracle(vehicle: VehicleSpec, m: ManeuverInput) -> FinalPose:
    """Closed-form final pose: arc of radius l/tan(delta), length v_i^2/(2|a|)."""
    _require_braking(m.a)
    s = m.v_i * m.v_i / (2.0 * abs(m.a))
    if m.delta == 0.0:
        return FinalPose(s, 0.0, 0.0)
    r = vehicle.wheelbase_l / math.tan(m.delta)
    theta_f = s / r
    return FinalPose(r * math.sin(theta_f), r * (1.0 - math.cos(theta_f)), theta_f)


def simulate_kinematic_batch(
    wheelbase_l: float,
    v_i: np.ndarray,
    a: np.ndarray,
    delta: np.ndarray,
    step: float = DEFAULT_STEP,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized RK4 over many maneuvers of one vehicle, in lockstep.

    Rows are sorted by stopping time internally so the active set shrinks to
    a slice; each row takes full steps of ``step`` and one final partial
    step solving v = 0.  Results match :func:`simulate_kinematic` row by row.
    """
    v_i = np.asarray(v_i, dtype=float)
    a = np.asarray(a, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if np.any(a >= 0):
        raise ValueError("all maneuvers must brake (a < 0)")
    if np.any(v_i <= 0):
        raise ValueError("all initial speeds must be positive")
    n = len(v_i)
    order = np.argsort(-(v_i / -a), kind="stable")
    V = v_i[order].copy()
    A = a[order].copy()
    TL = np.tan(delta[order]) / wheelbase_l
    X = np.zeros(n)
    Y = np.zeros(n)
    TH = np.zeros(n)
    pos = order.copy()
    out = np.zeros((3, n))

    end = n
    while end > 0:
        full = V[:end] + A[:end] * step > 0.0
        h = np.where(full, step, -V[:end] / A[:end])
        v, th, tl, aa = V[:end], TH[:end], TL[:end], A[:end]
        k1x, k1y, k1t = v * np.cos(th), v * np.sin(th), v * tl
        v2 = v + 0.5 * h * aa
        th2 = th + 0.5 * h * k1t
        k2x, k2y, k2t = v2 * np.cos(th2), v2 * np.sin(th2), v2 * tl
        th3 = th + 0.5 * h * k2t
        k3x, k3y, k3t = v2 * np.cos(th3), v2 * np.sin(th3), v2 * tl
        v4 = v + h * aa
        th4 = th + h * k3t
        k4x, k4y, k4t = v4 * np.cos(th4), v4 * np.sin(th4), v4 * tl
        X[:end] += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        Y[:end] += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        TH[:end] += h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t)
        V[:end] += h * aa
        if not full.all():
            done = np.nonzero(~full)[0]
            out[0, pos[done]] = X[done]
            out[1, pos[done]] = Y[done]
            out[2, pos[done]] = TH[done]
            keep = np.nonzero(full)[0]
            m = len(keep)
            for arr in (X, Y, TH, V, A, TL, pos):
                arr[:m] = arr[keep]
            end = m
    return out[0], out[1], out[2]


def calibrate_step(
    vehicle: VehicleSpec,
    tol: float = 1e-6,
    initial: float = DEFAULT_STEP,
    probe: ManeuverInput | None = None,
) -> float:
    """Halve the RK4 step until a demanding probe maneuver agrees with the
    analytic oracle to within ``tol`` on every pose component."""
    if probe is None:
        probe = ManeuverInput(v_i=5.0, a=-0.981, delta=0.7854)
    step = initial
    while True:
        got = simulate_kinematic(vehicle, probe, step)
        ref = analytic_arc_oracle(vehicle, probe)
        err = max(abs(got.X - ref.X), abs(got.Y - ref.Y), abs(got.theta - ref.theta))
        if err <= tol:
            return step
        step /= 2.0
        if step < 1e-7:
            raise RuntimeError("RK4 step calibration failed to converge")


def _saturated_inputs(
    vehicle: VehicleSpec, mu: float, v_i: float, a: float, delta: float, g: float
) -> tuple[float, float]:
    """Apply rear-axle and lateral adherence limits to (a, delta)."""
    limit = mu * g * vehicle.rear_normal_Nr / (vehicle.front_normal_Nf + vehicle.rear_normal_Nr)
    a_eff = -min(abs(a), limit)
    delta_eff = delta
    tan_d = math.tan(delta)
    if tan_d != 0.0:
        radius = vehicle.wheelbase_l / abs(tan_d)
        if mu * g * radius < v_i * v_i:
            radius_eff = v_i * v_i / (mu * g)
            delta_eff = math.copysign(math.atan(vehicle.wheelbase_l / radius_eff), delta)
    return a_eff, delta_eff


def record_noise_seed(seed: int, vehicle_name: str, index: int) -> int:
    """Stable per-record noise seed derived from a dataset seed."""
    ss = np.random.SeedSequence([seed, zlib.crc32(vehicle_name.encode()), index])
    return int(ss.generate_state(1, np.uint64)[0])


def simulate_dynamic_surrogate(
    vehicle: VehicleSpec,
    m: ManeuverInput,
    noise_seed: int,
    sigma_xy: float = SURROGATE_SIGMA_XY,
    sigma_theta: float = SURROGATE_SIGMA_THETA,
    step: float = DEFAULT_STEP,
) -> FinalPose:
    """Friction-limited braking outcome with measurement-like noise.

    The kinematic trajectory is integrated with effective inputs: the
    deceleration saturates at mu*g*Nr/(Nf+Nr) and, when the lateral
    adherence limit is exceeded, the turn radius widens to v_i^2/(mu*g).
    Gaussian noise (``sigma_xy`` on X and Y, ``sigma_theta`` on theta) is
    drawn from ``noise_seed``; pass zero sigmas to disable it.
    """
    _require_braking(m.a)
    if m.mu is None or not 0.0 < m.mu <= 1.5:
        raise ValueError(f"surrogate requires mu in (0, 1.5], got {m.mu}")
    a_eff, delta_eff = _saturated_inputs(vehicle, m.mu, m.v_i, m.a, m.delta, m.g)
    x, y, th, _ = _integrate_kinematic(vehicle.wheelbase_l, m.v_i, a_eff, delta_eff, step)
    rng = np.random.default_rng(noise_seed)
    dx = float(rng.normal(0.0, sigma_xy))
    dy = float(rng.normal(0.0, sigma_xy))
    dth = float(rng.normal(0.0, sigma_theta))
    return FinalPose(x + dx, y + dy, th + dth)


def simulate_surrogate_batch(
    vehicle: VehicleSpec,
    mu: np.ndarray,
    v_i: np.ndarray,
    a: np.ndarray,
    delta: np.ndarray,
    g: np.ndarray,
    seed: int,
    sigma_xy: float = SURROGATE_SIGMA_XY,
    sigma_theta: float = SURROGATE_SIGMA_THETA,
    step: float = DEFAULT_STEP,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized surrogate over a grid; row i uses ``record_noise_seed(seed, name, i)``."""
    n = len(v_i)
    a_eff = np.empty(n)
    delta_eff = np.empty(n)
    for i in range(n):
        a_eff[i], delta_eff[i] = _saturated_inputs(
            vehicle, float(mu[i]), float(v_i[i]), float(a[i]), float(delta[i]), float(g[i])
        )
    X, Y, TH = simulate_kinematic_batch(vehicle.wheelbase_l, v_i, a_eff, delta_eff, step)
    for i in range(n):
        rng = np.random.default_rng(record_noise_seed(seed, vehicle.name, i))
        X[i] += rng.normal(0.0, sigma_xy)
        Y[i] += rng.normal(0.0, sigma_xy)
        TH[i] += rng.normal(0.0, sigma_theta)
    return X, Y, TH

"""Ideal flat solar-sail force model and trajectory propagation."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import rk
from .astro import CartesianState, wrap_angle
from .units import CANONICAL

R_MIN = 0.05  # DU; integration aborts inside this radius
DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
MAX_STEPS = 2_000_000


class IntegrationError(RuntimeError):
    def __init__(self, status: int, t: float):
        super().__init__(f"{rk.STATUS_TEXT.get(status, 'integration failed')} at t={t:.6g} TU")
        self.status = status
        self.t = t


@dataclass(frozen=True)
class SailParams:
    beta: float

    def __post_init__(self):
        if not (0.0 <= self.beta < 1.0):
            raise ValueError(f"lightness number must satisfy 0 <= beta < 1, got {self.beta}")


@dataclass(frozen=True)
class SailControl:
    alpha: float
    delta: float

    def __post_init__(self):
        if not (-1e-12 <= self.alpha <= 0.5 * math.pi + 1e-12):
            raise ValueError(f"cone angle must lie in [0, pi/2], got {self.alpha}")
        object.__setattr__(self, "alpha", min(max(self.alpha, 0.0), 0.5 * math.pi))
        object.__setattr__(self, "delta", wrap_angle(self.delta))


FEATHERED = SailControl(0.5 * math.pi, 0.0)


@dataclass(frozen=True)
class ControlFrame:
    r_hat: np.ndarray
    h_hat: np.ndarray
    t_hat: np.ndarray

    def as_matrix(self) -> np.ndarray:
        """Rows are r_hat, h_hat, t_hat."""
        return np.vstack([self.r_hat, self.h_hat, self.t_hat])


@dataclass
class Trajectory:
    epochs: np.ndarray
    states: np.ndarray  # (n, 6)
    controls: np.ndarray  # (n, 2) alpha, delta
    stats: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.epochs)

    @property
    def final_state(self) -> CartesianState:
        return CartesianState.from_vector(self.states[-1], float(self.epochs[-1]))

    def samples(self):
        for t, s, c in zip(self.epochs, self.states, self.controls):
            yield float(t), CartesianState.from_vector(s, float(t)), SailControl(float(c[0]), float(c[1]))


def control_frame(state: CartesianState) -> ControlFrame:
    r = state.position
    h = np.cross(r, state.velocity)
    hn = np.linalg.norm(h)
    if hn < 1e-12:
        raise ValueError("control frame undefined for radial motion (|r x v| ~ 0)")
    r_hat = r / np.linalg.norm(r)
    h_hat = h / hn
    return ControlFrame(r_hat, h_hat, np.cross(h_hat, r_hat))


def sail_normal(control: SailControl, frame: ControlFrame) -> np.ndarray:
    ca, sa = math.cos(control.alpha), math.sin(control.alpha)
    return ca * frame.r_hat + sa * math.cos(control.delta) * frame.h_hat + sa * math.sin(control.delta) * frame.t_hat


def control_from_normal(n_hat: np.ndarray, frame: ControlFrame) -> SailControl:
    """Cone/clock angles of an inertial sail normal in ``frame``."""
    c = float(np.clip(n_hat @ frame.r_hat, -1.0, 1.0))
    delta = math.atan2(float(n_hat @ frame.t_hat), float(n_hat @ frame.h_hat))
    return SailControl(math.acos(max(c, 0.0)), delta)


def sail_acceleration(state: CartesianState, params: SailParams, control: SailControl) -> np.ndarray:
    """Radiation-pressure acceleration beta / R^2 cos^2(alpha) n_hat (mu = 1)."""
    r2 = float(state.position @ state.position)
    if params.beta == 0.0 or control.alpha >= 0.5 * math.pi:
        return np.zeros(3)  # cos(pi/2) is not exactly zero in floating point
    n_hat = sail_normal(control, control_frame(state))
    return params.beta / r2 * math.cos(control.alpha) ** 2 * n_hat


def beta_to_char_accel(beta: float, units=CANONICAL) -> float:
    """Characteristic acceleration in mm/s^2."""
    return beta * units.accel_unit_mm_s2


def char_accel_to_beta(ac_mm_s2: float, units=CANONICAL) -> float:
    return ac_mm_s2 / units.accel_unit_mm_s2


def state_derivative(state: CartesianState, params: SailParams, control: SailControl) -> np.ndarray:
    r = state.position
    rn = float(np.linalg.norm(r))
    acc = -r / rn**3 + sail_acceleration(state, params, control)
    return np.concatenate([state.velocity, acc])


def integrate(
    state0: CartesianState,
    control_policy: Callable[[float, CartesianState], SailControl],
    t0: float,
    tf: float,
    params: SailParams,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    h0: float = 0.0,
    r_min: float = R_MIN,
) -> Trajectory:
    """Propagate the sail under ``control_policy(epoch, state)`` from t0 to tf.

    Every accepted step is sampled. Raises :class:`IntegrationError` on step
    underflow or when the sail enters ``r_min``.
    """
    if not tf > t0:
        raise ValueError("tf must be greater than t0")
    beta = params.beta

    def rhs(t, y, _args, out):
        state = CartesianState(y[:3], y[3:6], t)
        out[:] = state_derivative(state, params, control_policy(t, state))

    y0 = state0.as_vector()
    status, t, _, nfev, nacc, nrej, ts, ys = rk.make_dopri54(rhs, jit=False)(
        None, t0, y0, tf, rtol, atol, h0, MAX_STEPS, True, r_min)
    if status != rk.OK:
        raise IntegrationError(status, t)
    controls = np.empty((len(ts), 2))
    for k, (tk, yk) in enumerate(zip(ts, ys)):
        c = control_policy(float(tk), CartesianState(yk[:3], yk[3:6], float(tk)))
        controls[k] = (c.alpha, c.delta)
    return Trajectory(ts, ys, controls, {"nfev": nfev, "accepted": nacc, "rejected": nrej, "beta": beta})


def constant_policy(control: SailControl):
    return lambda t, state: control


def export_trajectory_csv(traj: Trajectory, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch_tu", "x", "y", "z", "vx", "vy", "vz", "alpha", "delta"])
        for t, s, c in zip(traj.epochs, traj.states, traj.controls):
            w.writerow([repr(float(t)), *(repr(float(x)) for x in s), repr(float(c[0])), repr(float(c[1]))])


def osculating_energy(states: np.ndarray) -> np.ndarray:
    r = np.linalg.norm(states[:, :3], axis=1)
    v2 = np.einsum("ij,ij->i", states[:, 3:6], states[:, 3:6])
    return 0.5 * v2 - 1.0 / r


"""Indirect solution of the minimum-time solar-sail rendezvous.

The Hamiltonian is ``H = l0 + lR.V + lV.(-R/R^3 + a_s)`` with ``l0 > 0`` and
the control minimizes it.  The unknowns of the shooting function are the
time of flight (and optionally the departure epoch) plus the seven costate
components normalized onto the unit sphere.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit
from scipy.optimize import root

from . import rk
from .astro import CartesianState, KeplerianElements, coe_to_cartesian, kepler_rv, propagate_to, wrap_angle
from .dynamics import (DEFAULT_ATOL, DEFAULT_RTOL, R_MIN, ControlFrame, IntegrationError, SailControl,
                       Trajectory, control_frame, control_from_normal, sail_normal)
from .units import CANONICAL

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-8
FD_STEP = 1e-7
R_MAX = 20.0  # DU; guesses that wander past this are abandoned
EXTREMAL_MAX_STEPS = 200_000
PENALTY = 1e3
TOF_CAP_FACTOR = 1.5
SEARCH_RTOL = 1e-6
SEARCH_ATOL = 1e-8
SEARCH_ACCEPT = 1e-4
SEARCH_FD_STEP = 1e-5
POLISH_MAXFEV = 100


# ---------------------------------------------------------------------------
# types

@dataclass(frozen=True)
class Costate:
    lambda0: float
    lambda_r: np.ndarray
    lambda_v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lambda_r", np.asarray(self.lambda_r, dtype=float).reshape(3))
        object.__setattr__(self, "lambda_v", np.asarray(self.lambda_v, dtype=float).reshape(3))

    @classmethod
    def from_vector(cls, x) -> "Costate":
        x = np.asarray(x, dtype=float)
        return cls(float(x[0]), x[1:4], x[4:7])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([[self.lambda0], self.lambda_r, self.lambda_v])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.as_vector()))

    def normalized(self) -> "Costate":
        return Costate.from_vector(self.as_vector() / self.norm)


@dataclass(frozen=True)
class VelocityCostateAngles:
    alpha_tilde: float
    delta_tilde: float


@dataclass(frozen=True)
class ShootingProblem:
    departure: KeplerianElements
    arrival: KeplerianElements
    t0: float
    beta: float
    free_t0: bool = False
    tof_bounds: tuple = (CANONICAL.days_to_tu(50.0), CANONICAL.days_to_tu(1500.0))
    max_guesses: int = 100
    tol: float = RESIDUAL_TOL
    max_nfev: int = 400
    seed: int = 0
    t0_window: float = CANONICAL.days_to_tu(30.0)  # spread of initial t0 guesses when free

    def __post_init__(self):
        lo, hi = self.tof_bounds
        if not (0.0 < lo < hi):
            raise ValueError("tof_bounds must be positive and ordered")

    @property
    def n_unknowns(self) -> int:
        return 9 if self.free_t0 else 8


@dataclass(frozen=True)
class ShootingUnknowns:
    tf: float
    costate0: Costate
    t0: float | None = None

    def as_vector(self, problem: ShootingProblem) -> np.ndarray:
        """Solver vector: ``[t0], tof, l0, lR, lV``."""
        t0 = self.t0 if self.t0 is not None else problem.t0
        head = [t0, self.tf - t0] if problem.free_t0 else [self.tf - t0]
        return np.concatenate([head, self.costate0.as_vector()])

    @classmethod
    def from_vector(cls, x, problem: ShootingProblem) -> "ShootingUnknowns":
        x = np.asarray(x, dtype=float)
        if x.shape[0] != problem.n_unknowns:
            raise ValueError(f"expected {problem.n_unknowns} unknowns, got {x.shape[0]}")
        if problem.free_t0:
            t0 = float(x[0])
            return cls(t0 + float(x[1]), Costate.from_vector(x[2:]), t0)
        return cls(problem.t0 + float(x[0]), Costate.from_vector(x[1:]), None)

    def departure_epoch(self, problem: ShootingProblem) -> float:
        return self.t0 if self.t0 is not None else problem.t0


@dataclass
class OptimalTransfer:
    unknowns: ShootingUnknowns | None
    tof: float  # TU
    tof_days: float
    residual_norm: float
    converged: bool
    restarts_used: int
    trajectory: Trajectory | None = None
    residuals: np.ndarray | None = None
    guess_stats: list = field(default_factory=list)
    seed: int = 0

    def to_dict(self) -> dict:
        u = self.unknowns
        return {
            "converged": self.converged,
            "tof_tu": self.tof,
            "tof_days": self.tof_days,
            "residual_norm": self.residual_norm,
            "restarts_used": self.restarts_used,
            "seed": self.seed,
            "unknowns": None if u is None else {
                "t0": u.t0, "tf": u.tf,
                "lambda0": u.costate0.lambda0,
                "lambda_r": u.costate0.lambda_r.tolist(),
                "lambda_v": u.costate0.lambda_v.tolist(),
            },
            "residuals": None if self.residuals is None else self.residuals.tolist(),
            "guesses": self.guess_stats,
        }


class NoConvergence(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# compiled kernels

@njit(cache=True)
def _optimal_normal(R, lv):
    """Sail normal minimizing cos^2(alpha) (lv . n) and its cos(alpha)."""
    r = math.sqrt(R[0] * R[0] + R[1] * R[1] + R[2] * R[2])
    rh = R / r
    lvn = math.sqrt(lv[0] * lv[0] + lv[1] * lv[1] + lv[2] * lv[2])
    if lvn == 0.0:
        return rh.copy(), 1.0  # every normal is optimal; keep the sail facing the sun
    c = (lv[0] * rh[0] + lv[1] * rh[1] + lv[2] * rh[2]) / lvn
    perp = lv / lvn - c * rh
    s = math.sqrt(perp[0] * perp[0] + perp[1] * perp[1] + perp[2] * perp[2])
    root9 = math.sqrt(9.0 * c * c + 8.0 * s * s)
    # tan(alpha*) = (3c + sqrt(9c^2 + 8s^2)) / (4s), written without cancellation
    if c >= 0.0:
        num = 3.0 * c + root9
    else:
        num = 8.0 * s * s / (root9 - 3.0 * c)
    alpha = math.atan2(num, 4.0 * s)
    ca = math.cos(alpha)
    if s > 1e-300:
        n = ca * rh - math.sin(alpha) * perp / s
    else:
        n = rh.copy()
    return n, ca


@njit(cache=True)
def _extremal_rhs(t, y, args, out):
    beta = args[0]
    x, yy, z = y[0], y[1], y[2]
    r2 = x * x + yy * yy + z * z
    r = math.sqrt(r2)
    r3 = r2 * r
    lvx, lvy, lvz = y[9], y[10], y[11]
    out[0] = y[3]
    out[1] = y[4]
    out[2] = y[5]
    rl = x * lvx + yy * lvy + z * lvz
    g = 3.0 * rl / (r3 * r2)
    ax = -x / r3
    ay = -yy / r3
    az = -z / r3
    dx = lvx / r3 - g * x
    dy = lvy / r3 - g * yy
    dz = lvz / r3 - g * z
    if beta != 0.0:
        # optimal normal: cos(alpha) r_hat - sin(alpha) (unit part of lV normal to r_hat)
        rx, ry, rz = x / r, yy / r, z / r
        lvn = math.sqrt(lvx * lvx + lvy * lvy + lvz * lvz)
        if lvn == 0.0:
            ux, uy, uz = -rx, -ry, -rz  # every normal is optimal; face the sun
        else:
            ux, uy, uz = lvx / lvn, lvy / lvn, lvz / lvn
        c = ux * rx + uy * ry + uz * rz
        px, py, pz = ux - c * rx, uy - c * ry, uz - c * rz
        s = math.sqrt(px * px + py * py + pz * pz)
        root9 = math.sqrt(9.0 * c * c + 8.0 * s * s)
        if c >= 0.0:
            num = 3.0 * c + root9
        else:
            num = 8.0 * s * s / (root9 - 3.0 * c)
        den = 4.0 * s
        hyp = math.sqrt(num * num + den * den)
        if hyp == 0.0:
            ca, sa = 1.0, 0.0  # primer vector along the sun line
        else:
            ca = den / hyp
            sa = num / hyp
        if s > 1e-300:
            nx = ca * rx - sa * px / s
            ny = ca * ry - sa * py / s
            nz = ca * rz - sa * pz / s
        else:
            nx, ny, nz = rx, ry, rz
        k = beta * ca * ca / r2
        ax += k * nx
        ay += k * ny
        az += k * nz
        ln = lvx * nx + lvy * ny + lvz * nz
        q = 2.0 * beta * ca / r3 * ln
        w = 2.0 * ca / r
        dx -= q * (nx - w * x)
        dy -= q * (ny - w * yy)
        dz -= q * (nz - w * z)
    out[3] = ax
    out[4] = ay
    out[5] = az
    out[6] = dx
    out[7] = dy
    out[8] = dz
    out[9] = -y[6]
    out[10] = -y[7]
    out[11] = -y[8]


_extremal_dopri = rk.make_dopri54(_extremal_rhs)


@njit(cache=True)
def _h_extremal(y, lambda0, beta):
    x, yy, z = y[0], y[1], y[2]
    r = math.sqrt(x * x + yy * yy + z * z)
    h = lambda0 + y[6] * y[3] + y[7] * y[4] + y[8] * y[5] - (y[9] * x + y[10] * yy + y[11] * z) / r**3
    if beta != 0.0:
        n, ca = _optimal_normal(y[0:3], y[9:12])
        h += beta * ca * ca / (r * r) * (y[9] * n[0] + y[10] * n[1] + y[11] * n[2])
    return h


@njit(cache=True)
def _boundary_nb(lr, lv, body):
    """lR . V_body - lV . R_body / R_body^3."""
    rb = math.sqrt(body[0] ** 2 + body[1] ** 2 + body[2] ** 2)
    return (lr[0] * body[3] + lr[1] * body[4] + lr[2] * body[5]
            - (lv[0] * body[0] + lv[1] * body[1] + lv[2] * body[2]) / rb**3)


@njit
def _residual_kernel(x, dep_el, dep_epoch, arr_el, arr_epoch, t0_fixed, beta, free_t0, rtol, atol, r_max):
    """Shooting residuals; returns ``(status, t_fail, res)``."""
    if free_t0:
        t0 = x[0]
        tof = x[1]
        lam = x[2:9]
    else:
        t0 = t0_fixed
        tof = x[0]
        lam = x[1:8]
    tf = t0 + tof
    m = 9 if free_t0 else 8
    res = np.zeros(m)
    dep = kepler_rv(dep_el, t0 - dep_epoch)
    y0 = np.empty(12)
    y0[0:6] = dep
    y0[6:12] = lam[1:7]
    if tof == 0.0:
        y = y0
    else:
        args = np.empty(1)
        args[0] = beta
        status, t, y, nfev, na, nr, ts, ys = _extremal_dopri(args, t0, y0, tf, rtol, atol, 0.0,
                                                              EXTREMAL_MAX_STEPS, False, R_MIN)
        if status != 0:
            return status, t, res
        if y[0] ** 2 + y[1] ** 2 + y[2] ** 2 > r_max * r_max:
            return rk.NONFINITE, tf, res
    arr = kepler_rv(arr_el, tf - arr_epoch)
    for j in range(6):
        res[j] = y[j] - arr[j]
    res[6] = _h_extremal(y, lam[0], beta) - _boundary_nb(y[6:9], y[9:12], arr)
    nrm = 0.0
    for j in range(7):
        nrm += lam[j] * lam[j]
    res[7] = math.sqrt(nrm) - 1.0
    if free_t0:
        res[8] = _h_extremal(y0, lam[0], beta) - _boundary_nb(lam[1:4], lam[4:7], dep)
    return 0, tf, res


def _propagate_raw(y0, beta, t0, tf, record=False, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    args = np.array([float(beta)])
    return _extremal_dopri(args, float(t0), np.ascontiguousarray(y0, dtype=float), float(tf),
                           rtol, atol, 0.0, EXTREMAL_MAX_STEPS, record, R_MIN)


# ---------------------------------------------------------------------------
# control law and Hamiltonian

def velocity_costate_angles(lambda_v, frame: ControlFrame) -> VelocityCostateAngles:
    lv = np.asarray(lambda_v, dtype=float)
    n = np.linalg.norm(lv)
    if n <= 1e-14:
        raise ValueError("velocity costate is ~0; control undefined")
    u = lv / n
    c = float(u @ frame.r_hat)
    s = float(np.linalg.norm(u - c * frame.r_hat))
    delta = wrap_angle(math.atan2(float(u @ frame.t_hat), float(u @ frame.h_hat)))
    return VelocityCostateAngles(math.atan2(s, c), delta)


def optimal_control(lambda_v, frame: ControlFrame) -> SailControl:
    """Cone/clock angles minimizing the Hamiltonian for a given velocity costate.

    The clock angle is opposite the costate's (delta* = delta~ + pi); the cone
    angle is the steering-law root of tan(alpha*) as a function of alpha~.
    """
    ang = velocity_costate_angles(lambda_v, frame)
    c, s = math.cos(ang.alpha_tilde), math.sin(ang.alpha_tilde)
    root9 = math.sqrt(9.0 * c * c + 8.0 * s * s)
    num = 3.0 * c + root9 if c >= 0.0 else 8.0 * s * s / (root9 - 3.0 * c)
    alpha = math.atan2(num, 4.0 * s)
    return SailControl(alpha, ang.delta_tilde + math.pi)


def optimal_normal(state: CartesianState, lambda_v) -> np.ndarray:
    n, _ = _optimal_normal(state.position, np.asarray(lambda_v, dtype=float))
    return n


def _resolve_normal(state: CartesianState, control) -> np.ndarray:
    if isinstance(control, SailControl):
        return sail_normal(control, control_frame(state))
    n = np.asarray(control, dtype=float).reshape(3)
    return n / np.linalg.norm(n)


def control_term(state: CartesianState, lambda_v, control, beta: float) -> float:
    """Sail part of the Hamiltonian: lV . (beta / R^2 cos^2(alpha) n_hat).

    ``control`` is a :class:`SailControl` or a fixed inertial unit normal; in
    the latter case cos(alpha) is its projection on the sun line (zero thrust
    when it faces the sun's back side).
    """
    R = state.position
    n = _resolve_normal(state, control)
    ca = max(float(n @ R) / float(np.linalg.norm(R)), 0.0)
    return beta * ca * ca / float(R @ R) * float(np.asarray(lambda_v) @ n)


def hamiltonian(state: CartesianState, costate: Costate, control, beta: float) -> float:
    R, V = state.position, state.velocity
    r = float(np.linalg.norm(R))
    return (costate.lambda0 + float(costate.lambda_r @ V) - float(costate.lambda_v @ R) / r**3
            + control_term(state, costate.lambda_v, control, beta))


def costate_derivative(state: CartesianState, costate: Costate, control, beta: float):
    """(dlR/dt, dlV/dt) = -dH/d(R, V), holding the inertial sail normal fixed."""
    R = state.position
    r = float(np.linalg.norm(R))
    lv = costate.lambda_v
    n = _resolve_normal(state, control)
    ca = max(float(n @ R) / r, 0.0)
    dlr = lv / r**3 - 3.0 * float(R @ lv) / r**5 * R
    if beta != 0.0 and ca > 0.0:
        dlr = dlr - 2.0 * beta * ca / r**3 * float(lv @ n) * (n - 2.0 * ca / r * R)
    return dlr, -costate.lambda_r.copy()


def extremal_hamiltonian(y: np.ndarray, lambda0: float, beta: float) -> float:
    """H at the optimal control for the packed 12-vector (R, V, lR, lV)."""
    R, V, lr, lv = y[0:3], y[3:6], y[6:9], y[9:12]
    r = float(np.linalg.norm(R))
    h = lambda0 + float(lr @ V) - float(lv @ R) / r**3
    if beta != 0.0:
        n, ca = _optimal_normal(R, lv)
        h += beta * ca * ca / r**2 * float(lv @ n)
    return h


# ---------------------------------------------------------------------------
# extremal propagation

def _pack(state: CartesianState, costate: Costate) -> np.ndarray:
    return np.concatenate([state.position, state.velocity, costate.lambda_r, costate.lambda_v])


def propagate_extremal(state0: CartesianState, costate0: Costate, beta: float, t0: float, tf: float,
                       record: bool = True):
    """Integrate state and costate with the optimal control fed back.

    Returns ``(state_f, costate_f, trajectory)``.
    """
    y0 = _pack(state0, costate0)
    if tf == t0:
        ys = y0[None, :]
        ts = np.array([t0])
        status, nfev = rk.OK, 0
        y = y0
    else:
        status, t, y, nfev, nacc, nrej, ts, ys = _propagate_raw(y0, beta, t0, tf, record=record)
        if status != rk.OK:
            raise IntegrationError(status, t)
    controls = np.empty((len(ts), 2))
    for k, yk in enumerate(ys):
        st = CartesianState(yk[0:3], yk[3:6])
        try:
            ctrl = control_from_normal(optimal_normal(st, yk[9:12]), control_frame(st))
            controls[k] = (ctrl.alpha, ctrl.delta)
        except ValueError:
            controls[k] = np.nan
    traj = Trajectory(np.asarray(ts), np.asarray(ys)[:, :6], controls,
                      {"nfev": nfev, "beta": beta, "costates": np.asarray(ys)[:, 6:12]})
    state_f = CartesianState(y[0:3], y[3:6], tf)
    costate_f = Costate(costate0.lambda0, y[6:9], y[9:12])
    return state_f, costate_f, traj


# ---------------------------------------------------------------------------
# shooting

def _body_state(coe: KeplerianElements, epoch: float) -> CartesianState:
    return coe_to_cartesian(propagate_to(coe, epoch))


def _boundary_term(costate_r, costate_v, body: CartesianState) -> float:
    """lR . V_body - lV . R_body / R_body^3  (the stationarity right-hand side)."""
    Rb = body.position
    return float(costate_r @ body.velocity) - float(costate_v @ Rb) / float(np.linalg.norm(Rb)) ** 3


def _residuals_vec(x: np.ndarray, problem: ShootingProblem, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL) -> np.ndarray:
    dep, arr = problem.departure, problem.arrival
    status, t, res = _residual_kernel(
        np.ascontiguousarray(x, dtype=float), dep.as_array(), dep.epoch, arr.as_array(), arr.epoch,
        float(problem.t0), float(problem.beta), bool(problem.free_t0), rtol, atol, R_MAX)
    if status != rk.OK:
        raise IntegrationError(status, t)
    return res


def shooting_residuals(unknowns, problem: ShootingProblem) -> np.ndarray:
    """Terminal mismatch (6), final stationarity, sphere constraint[, initial stationarity].

    Raises :class:`IntegrationError` when the extremal cannot be propagated.
    """
    x = unknowns.as_vector(problem) if isinstance(unknowns, ShootingUnknowns) else np.asarray(unknowns, float)
    if x.shape[0] != problem.n_unknowns:
        raise ValueError(f"expected {problem.n_unknowns} unknowns, got {x.shape[0]}")
    return _residuals_vec(x, problem)


class _InvalidGuess(Exception):
    pass


def _random_guess(problem: ShootingProblem, rng: np.random.Generator) -> np.ndarray:
    lam = rng.standard_normal(7)
    lam /= np.linalg.norm(lam)
    lam[0] = abs(lam[0])
    tof = rng.uniform(*problem.tof_bounds)
    if problem.free_t0:
        t0 = problem.t0 + rng.uniform(-0.5, 0.5) * problem.t0_window
        return np.concatenate([[t0, tof], lam])
    return np.concatenate([[tof], lam])


def _identical_bodies(problem: ShootingProblem) -> bool:
    a = _body_state(problem.departure, problem.t0).as_vector()
    b = _body_state(problem.arrival, problem.t0).as_vector()
    return bool(np.max(np.abs(a - b)) <= 1e-12)


def guess_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(index,))))


def _root(problem, x0, rtol, atol, maxfev, fd_step=FD_STEP):
    penalty = np.full(problem.n_unknowns, PENALTY)
    tof_cap = TOF_CAP_FACTOR * problem.tof_bounds[1]
    head = 1 if problem.free_t0 else 0

    def fun(x):
        # failed propagations get a flat penalty so the trust region backs off
        if not (-tof_cap < x[head] < tof_cap):
            return penalty
        try:
            r = _residuals_vec(x, problem, rtol, atol)
        except (IntegrationError, ValueError):
            return penalty
        return r if np.all(np.isfinite(r)) else penalty

    if fun(x0) is penalty:
        raise _InvalidGuess("initial guess cannot be propagated")
    return root(fun, x0, method="hybr", options={"maxfev": maxfev, "eps": fd_step**2, "xtol": 1e-13})


def attempt(problem: ShootingProblem, x0: np.ndarray):
    """Run the root finder from one initial guess.

    The search runs against a cheaper propagation (``SEARCH_RTOL``); a
    candidate within ``SEARCH_ACCEPT`` is then polished at full accuracy.
    Returns ``(x, residuals, ok, nfev, message)``; ``ok`` means the
    residual infinity-norm met the tolerance with a physical solution.
    """
    try:
        sol = _root(problem, x0, SEARCH_RTOL, SEARCH_ATOL, problem.max_nfev, SEARCH_FD_STEP)
        nfev = int(sol.nfev)
        x = sol.x
        if np.max(np.abs(sol.fun)) > SEARCH_ACCEPT:
            return x, sol.fun, False, nfev, sol.message
        sol = _root(problem, x, DEFAULT_RTOL, DEFAULT_ATOL, POLISH_MAXFEV)
        nfev += int(sol.nfev)
        x = sol.x
        res = _residuals_vec(x, problem)
    except _InvalidGuess as exc:
        return x0, None, False, 0, str(exc)
    except (IntegrationError, ValueError) as exc:
        return x, None, False, nfev, str(exc)
    u = ShootingUnknowns.from_vector(x, problem)
    tof = u.tf - u.departure_epoch(problem)
    ok = bool(np.max(np.abs(res)) <= problem.tol and tof > 0.0 and u.costate0.lambda0 >= 0.0)
    return x, res, ok, nfev, sol.message


def solve_transfer(problem: ShootingProblem, record_trajectory: bool = False) -> OptimalTransfer:
    """Multistart shooting: random costates on the unit sphere, random time of flight."""
    days = CANONICAL.days_per_tu
    if not problem.free_t0 and _identical_bodies(problem):
        lam = Costate(1.0, np.zeros(3), np.zeros(3))
        return OptimalTransfer(ShootingUnknowns(problem.t0, lam), 0.0, 0.0, 0.0, True, 0,
                               residuals=np.zeros(problem.n_unknowns), seed=problem.seed)
    stats = []
    for k in range(problem.max_guesses):
        x0 = _random_guess(problem, guess_rng(problem.seed, k))
        x, res, ok, nfev, msg = attempt(problem, x0)
        rnorm = float(np.max(np.abs(res))) if res is not None else math.inf
        stats.append({"guess": k, "nfev": nfev, "residual": rnorm, "converged": ok})
        if ok:
            u = ShootingUnknowns.from_vector(x, problem)
            tof = u.tf - u.departure_epoch(problem)
            out = OptimalTransfer(u, tof, tof * days, rnorm, True, k + 1, residuals=res,
                                  guess_stats=stats, seed=problem.seed)
            if record_trajectory:
                out.trajectory = transfer_trajectory(out, problem)
            return out
    return OptimalTransfer(None, math.nan, math.nan, min((s["residual"] for s in stats), default=math.inf),
                           False, problem.max_guesses, guess_stats=stats, seed=problem.seed)


def transfer_trajectory(transfer: OptimalTransfer, problem: ShootingProblem) -> Trajectory:
    u = transfer.unknowns
    t0 = u.departure_epoch(problem)
    dep = _body_state(problem.departure, t0)
    _, _, traj = propagate_extremal(dep, u.costate0, problem.beta, t0, u.tf)
    return traj


def solve_transfer_best_of(problem: ShootingProblem, n: int = 10) -> OptimalTransfer:
    """Best (shortest) converged transfer over ``n`` independently seeded multistarts."""
    if n < 1:
        raise ValueError("n must be >= 1")
    runs = []
    for j in range(n):
        seed = problem.seed if n == 1 else int(np.random.SeedSequence(entropy=problem.seed,
                                                                         spawn_key=(1_000_003, j)).generate_state(1)[0])
        runs.append(solve_transfer(replace(problem, seed=seed)))
    good = [r for r in runs if r.converged]
    if not good:
        raise NoConvergence(f"all {n} multistart runs failed")
    best = min(good, key=lambda r: r.tof)
    best.guess_stats = [{"run": j, "seed": r.seed, "converged": r.converged,
                         "tof_days": r.tof_days, "restarts": r.restarts_used,
                         "residual": r.residual_norm} for j, r in enumerate(runs)]
    return best

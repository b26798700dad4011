"""Two-body orbit representations, Kepler propagation and pseudo-NEA sampling.

All quantities are in canonical units (DU, TU, mu = 1) unless a name says
otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi

# Bounds of the pseudo-NEA hyper-rectangle on (a [AU], e, i [rad]).
NEA_BOUNDS = {"a": (0.8, 1.2), "e": (0.0, 0.2), "i": (0.0, 0.2)}

FEATURE_KINDS = ("COE", "RV", "MOE")


class KeplerError(RuntimeError):
    """Kepler's equation failed to converge."""


def wrap_angle(x: float) -> float:
    x = math.fmod(x, TWO_PI)
    if x < 0.0:
        x += TWO_PI
    # fmod of a tiny negative number can round up to exactly 2*pi
    return 0.0 if x >= TWO_PI else x


@dataclass(frozen=True)
class KeplerianElements:
    a: float
    e: float
    i: float
    raan: float
    argp: float
    true_anomaly: float
    epoch: float = 0.0

    def __post_init__(self):
        if not (self.a > 0.0 and math.isfinite(self.a)):
            raise ValueError(f"semi-major axis must be positive, got {self.a}")
        if not (0.0 <= self.e < 1.0):
            raise ValueError(f"only elliptic orbits are supported (0 <= e < 1), got e={self.e}")
        if not (0.0 <= self.i <= math.pi):
            raise ValueError(f"inclination must lie in [0, pi], got {self.i}")
        for name in ("raan", "argp", "true_anomaly"):
            object.__setattr__(self, name, wrap_angle(getattr(self, name)))

    @property
    def period(self) -> float:
        return TWO_PI * self.a**1.5

    @property
    def mean_motion(self) -> float:
        return self.a**-1.5

    @property
    def mean_anomaly(self) -> float:
        return true_to_mean(self.true_anomaly, self.e)

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.e, self.i, self.raan, self.argp, self.true_anomaly])


@dataclass(frozen=True)
class CartesianState:
    position: np.ndarray
    velocity: np.ndarray
    epoch: float = 0.0

    def __post_init__(self):
        r = np.asarray(self.position, dtype=float).reshape(3)
        v = np.asarray(self.velocity, dtype=float).reshape(3)
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(v))):
            raise ValueError("state components must be finite")
        if np.linalg.norm(r) <= 0.0:
            raise ValueError("position must be nonzero")
        object.__setattr__(self, "position", r)
        object.__setattr__(self, "velocity", v)

    @classmethod
    def from_vector(cls, y, epoch: float = 0.0) -> "CartesianState":
        y = np.asarray(y, dtype=float)
        return cls(y[:3], y[3:6], epoch)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.position, self.velocity])

    @property
    def energy(self) -> float:
        return 0.5 * float(self.velocity @ self.velocity) - 1.0 / float(np.linalg.norm(self.position))

    @property
    def angular_momentum(self) -> np.ndarray:
        return np.cross(self.position, self.velocity)


# ---------------------------------------------------------------------------
# anomalies

def true_to_eccentric(f: float, e: float) -> float:
    return 2.0 * math.atan2(math.sqrt(1.0 - e) * math.sin(0.5 * f), math.sqrt(1.0 + e) * math.cos(0.5 * f))


def eccentric_to_true(E: float, e: float) -> float:
    return 2.0 * math.atan2(math.sqrt(1.0 + e) * math.sin(0.5 * E), math.sqrt(1.0 - e) * math.cos(0.5 * E))


def true_to_mean(f: float, e: float) -> float:
    E = true_to_eccentric(f, e)
    return wrap_angle(E - e * math.sin(E))


def solve_kepler(M: float, e: float, tol: float = 1e-12, max_iter: int = 50) -> float:
    """Eccentric anomaly for mean anomaly M by Newton iteration from E0 = M."""
    M = wrap_angle(M)
    E = M
    for _ in range(max_iter):
        g = E - e * math.sin(E) - M
        if abs(g) <= tol:
            return E
        E -= g / (1.0 - e * math.cos(E))
    if abs(E - e * math.sin(E) - M) <= tol:
        return E
    raise KeplerError(f"Kepler iteration did not converge for M={M}, e={e}")


def mean_to_true(M: float, e: float) -> float:
    return wrap_angle(eccentric_to_true(solve_kepler(M, e), e))


# ---------------------------------------------------------------------------
# conversions

def _perifocal_rotation(i: float, raan: float, argp: float) -> np.ndarray:
    cO, sO = math.cos(raan), math.sin(raan)
    cw, sw = math.cos(argp), math.sin(argp)
    ci, si = math.cos(i), math.sin(i)
    return np.array([
        [cO * cw - sO * sw * ci, -cO * sw - sO * cw * ci, sO * si],
        [sO * cw + cO * sw * ci, -sO * sw + cO * cw * ci, -cO * si],
        [sw * si, cw * si, ci],
    ])


def coe_to_cartesian(coe: KeplerianElements) -> CartesianState:
    """Position and velocity of the body described by ``coe`` at ``coe.epoch``."""
    if coe.e >= 1.0:
        raise ValueError("hyperbolic or parabolic orbits are not supported")
    p = coe.a * (1.0 - coe.e**2)
    f = coe.true_anomaly
    r = p / (1.0 + coe.e * math.cos(f))
    sqrt_mu_p = math.sqrt(1.0 / p)
    r_pf = np.array([r * math.cos(f), r * math.sin(f), 0.0])
    v_pf = np.array([-sqrt_mu_p * math.sin(f), sqrt_mu_p * (coe.e + math.cos(f)), 0.0])
    rot = _perifocal_rotation(coe.i, coe.raan, coe.argp)
    return CartesianState(rot @ r_pf, rot @ v_pf, coe.epoch)


def cartesian_to_coe(state: CartesianState) -> KeplerianElements:
    """Osculating elements of an elliptic state.

    Undefined angles are resolved by convention: for circular orbits the
    argument of periapsis is 0 and the anomaly is measured from the node (or
    from +x for equatorial orbits); for equatorial orbits RAAN is 0.
    """
    r = state.position
    v = state.velocity
    rn = float(np.linalg.norm(r))
    h = np.cross(r, v)
    hn = float(np.linalg.norm(h))
    if hn < 1e-12:
        raise ValueError("rectilinear state: angular momentum is zero")
    energy = 0.5 * float(v @ v) - 1.0 / rn
    if energy >= 0.0:
        raise ValueError("state is not elliptic (energy >= 0)")
    a = -0.5 / energy
    e_vec = np.cross(v, h) - r / rn
    e = float(np.linalg.norm(e_vec))
    i = math.acos(max(-1.0, min(1.0, h[2] / hn)))

    node = np.array([-h[1], h[0], 0.0])
    nn = float(np.linalg.norm(node))
    eps = 1e-11
    equatorial = nn < eps * hn
    circular = e < eps

    if equatorial:
        raan = 0.0
        node_dir = np.array([1.0, 0.0, 0.0])
    else:
        raan = math.atan2(node[1], node[0])
        node_dir = node / nn
    # unit vector completing the in-plane basis from node_dir
    perp = np.cross(h / hn, node_dir)

    if circular:
        argp = 0.0
        f = math.atan2(float(r @ perp), float(r @ node_dir))
    else:
        argp = math.atan2(float(e_vec @ perp), float(e_vec @ node_dir))
        e_hat = e_vec / e
        q_hat = np.cross(h / hn, e_hat)
        f = math.atan2(float(r @ q_hat), float(r @ e_hat))
    return KeplerianElements(a, e, i, raan, argp, f, state.epoch)


def propagate_kepler(coe: KeplerianElements, dt: float) -> KeplerianElements:
    """Advance the body along its conic by ``dt`` TU (negative is allowed)."""
    if not math.isfinite(dt):
        raise ValueError("dt must be finite")
    M = coe.mean_anomaly + coe.mean_motion * dt
    f = mean_to_true(M, coe.e)
    return replace(coe, true_anomaly=f, epoch=coe.epoch + dt)


def propagate_to(coe: KeplerianElements, epoch: float) -> KeplerianElements:
    return propagate_kepler(coe, epoch - coe.epoch)


def state_at(coe: KeplerianElements, epoch: float) -> CartesianState:
    return coe_to_cartesian(propagate_to(coe, epoch))


@njit(cache=True)
def kepler_rv(el, dt):
    """Compiled position/velocity after ``dt`` TU for ``el = (a, e, i, raan, argp, f)``."""
    a, e, inc, raan, argp, f0 = el[0], el[1], el[2], el[3], el[4], el[5]
    E0 = 2.0 * math.atan2(math.sqrt(1.0 - e) * math.sin(0.5 * f0), math.sqrt(1.0 + e) * math.cos(0.5 * f0))
    M = E0 - e * math.sin(E0) + dt * a**-1.5
    M = M % TWO_PI
    E = M
    for _ in range(50):
        g = E - e * math.sin(E) - M
        if abs(g) <= 1e-12:
            break
        E -= g / (1.0 - e * math.cos(E))
    f = 2.0 * math.atan2(math.sqrt(1.0 + e) * math.sin(0.5 * E), math.sqrt(1.0 - e) * math.cos(0.5 * E))
    p = a * (1.0 - e * e)
    r = p / (1.0 + e * math.cos(f))
    smp = math.sqrt(1.0 / p)
    xp, yp = r * math.cos(f), r * math.sin(f)
    vxp, vyp = -smp * math.sin(f), smp * (e + math.cos(f))
    cO, sO = math.cos(raan), math.sin(raan)
    cw, sw = math.cos(argp), math.sin(argp)
    ci, si = math.cos(inc), math.sin(inc)
    p11, p12 = cO * cw - sO * sw * ci, -cO * sw - sO * cw * ci
    p21, p22 = sO * cw + cO * sw * ci, -sO * sw + cO * cw * ci
    p31, p32 = sw * si, cw * si
    out = np.empty(6)
    out[0] = p11 * xp + p12 * yp
    out[1] = p21 * xp + p22 * yp
    out[2] = p31 * xp + p32 * yp
    out[3] = p11 * vxp + p12 * vyp
    out[4] = p21 * vxp + p22 * vyp
    out[5] = p31 * vxp + p32 * vyp
    return out


# ---------------------------------------------------------------------------
# sampling

def make_rng(seed) -> np.random.Generator:
    """PCG64 generator; the only RNG used for reproducible data."""
    return np.random.Generator(np.random.PCG64(seed))


def sample_pseudo_neas(count: int, seed, epoch: float = 0.0) -> list[KeplerianElements]:
    """Random elements uniformly filling the pseudo-NEA box around 1 AU."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = make_rng(seed)
    a = 1.0 + 0.2 * rng.uniform(-1.0, 1.0, count)
    e = 0.2 * rng.uniform(0.0, 1.0, count)
    i = 0.2 * rng.uniform(0.0, 1.0, count)
    raan = TWO_PI * rng.uniform(0.0, 1.0, count)
    argp = TWO_PI * rng.uniform(0.0, 1.0, count)
    f = TWO_PI * rng.uniform(0.0, 1.0, count)
    return [
        KeplerianElements(float(a[k]), float(e[k]), float(i[k]), float(raan[k]),
                          float(argp[k]), float(f[k]), epoch)
        for k in range(count)
    ]


def in_nea_bounds(coe: KeplerianElements, bounds=NEA_BOUNDS) -> bool:
    return all(lo <= getattr(coe, key) <= hi for key, (lo, hi) in bounds.items())


# ---------------------------------------------------------------------------
# features

def modified_equinoctial(coe: KeplerianElements) -> np.ndarray:
    """(p, f, g, h, k, L) modified equinoctial elements."""
    if abs(coe.i - math.pi) < 1e-12:
        raise ValueError("modified equinoctial elements are singular for i = pi")
    lon_peri = coe.raan + coe.argp
    t = math.tan(0.5 * coe.i)
    return np.array([
        coe.a * (1.0 - coe.e**2),
        coe.e * math.cos(lon_peri),
        coe.e * math.sin(lon_peri),
        t * math.cos(coe.raan),
        t * math.sin(coe.raan),
        wrap_angle(lon_peri + coe.true_anomaly),
    ])


def body_features(coe: KeplerianElements, kind: str) -> np.ndarray:
    if kind == "COE":
        return coe.as_array()
    if kind == "RV":
        return coe_to_cartesian(coe).as_vector()
    if kind == "MOE":
        return modified_equinoctial(coe)
    raise ValueError(f"unknown feature kind {kind!r}; expected one of {FEATURE_KINDS}")


def coe_to_features(coe_pair, kind: str = "COE") -> np.ndarray:
    """12-vector describing a (departure, arrival) pair."""
    dep, arr = coe_pair
    return np.concatenate([body_features(dep, kind), body_features(arr, kind)])

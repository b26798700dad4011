"""Dormand-Prince 5(4) adaptive integrator.

``make_dopri54`` binds the stepping loop to a right-hand side; the loop is
compiled with numba for numba right-hand sides and runs as plain Python
otherwise.
"""
from __future__ import annotations

import numpy as np
from numba import njit

OK = 0
STEP_UNDERFLOW = 1
MAX_STEPS = 2
SUN_IMPACT = 3
NONFINITE = 4

STATUS_TEXT = {
    OK: "ok",
    STEP_UNDERFLOW: "step size underflow",
    MAX_STEPS: "maximum number of steps exceeded",
    SUN_IMPACT: "trajectory entered the solar exclusion radius",
    NONFINITE: "non-finite state",
}

# Dormand & Prince (1980) tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# 5th minus embedded 4th order weights
E1 = 71 / 57600
E3 = -71 / 16695
E4 = 71 / 1920
E5 = -17253 / 339200
E6 = 22 / 525
E7 = -1 / 40


def make_dopri54(rhs, jit=True):
    """Build an integrator bound to ``rhs(t, y, args, out)``.

    With ``jit`` the loop is compiled (``rhs`` must then be a numba
    function); otherwise the same loop runs as plain Python.
    """

    def dopri54(args, t0, y0, tf, rtol, atol, h0, max_steps, record, r_min):
        """Integrate ``y' = f(t, y)`` from t0 to tf.

        ``rhs(t, y, args, out)`` writes f into ``out``. Returns
        ``(status, t, y, nfev, n_accept, n_reject, ts, ys)``; when ``record`` is
        false ``ts``/``ys`` hold only the two endpoints. Position is assumed to
        be ``y[0:3]``; entering ``|r| < r_min`` aborts.
        """
        n = y0.shape[0]
        y = y0.copy()
        t = t0
        span = tf - t0
        direction = 1.0 if span >= 0.0 else -1.0
        cap = 256 if record else 2
        ts = np.empty(cap)
        ys = np.empty((cap, n))
        ts[0] = t0
        ys[0] = y0
        n_rec = 1
        if span == 0.0:
            return OK, t, y, 0, 0, 0, ts[:1], ys[:1]

        k1 = np.empty(n)
        k2 = np.empty(n)
        k3 = np.empty(n)
        k4 = np.empty(n)
        k5 = np.empty(n)
        k6 = np.empty(n)
        k7 = np.empty(n)
        yt = np.empty(n)
        y_new = np.empty(n)

        h = abs(h0) if h0 > 0.0 else min(abs(span), 1e-3)
        rhs(t, y, args, k1)
        nfev = 1
        n_accept = 0
        n_reject = 0
        status = OK
        hmin = 1e-14 * max(abs(t0), abs(tf), 1.0)

        while True:
            remaining = (tf - t) * direction
            if remaining <= 0.0:
                break
            last = False
            if h >= remaining:
                h = remaining
                last = True
            if h < hmin and not last:
                status = STEP_UNDERFLOW
                break
            if n_accept + n_reject >= max_steps:
                status = MAX_STEPS
                break
            hs = h * direction
            for j in range(n):
                yt[j] = y[j] + hs * A21 * k1[j]
            rhs(t + C2 * hs, yt, args, k2)
            for j in range(n):
                yt[j] = y[j] + hs * (A31 * k1[j] + A32 * k2[j])
            rhs(t + C3 * hs, yt, args, k3)
            for j in range(n):
                yt[j] = y[j] + hs * (A41 * k1[j] + A42 * k2[j] + A43 * k3[j])
            rhs(t + C4 * hs, yt, args, k4)
            for j in range(n):
                yt[j] = y[j] + hs * (A51 * k1[j] + A52 * k2[j] + A53 * k3[j] + A54 * k4[j])
            rhs(t + C5 * hs, yt, args, k5)
            for j in range(n):
                yt[j] = y[j] + hs * (A61 * k1[j] + A62 * k2[j] + A63 * k3[j] + A64 * k4[j] + A65 * k5[j])
            rhs(t + hs, yt, args, k6)
            for j in range(n):
                y_new[j] = y[j] + hs * (B1 * k1[j] + B3 * k3[j] + B4 * k4[j] + B5 * k5[j] + B6 * k6[j])
            rhs(t + hs, y_new, args, k7)
            nfev += 6
            err = 0.0
            finite = True
            for j in range(n):
                if not np.isfinite(y_new[j]) or not np.isfinite(k7[j]):
                    finite = False
                e = hs * (E1 * k1[j] + E3 * k3[j] + E4 * k4[j] + E5 * k5[j] + E6 * k6[j] + E7 * k7[j])
                sc = atol + rtol * max(abs(y[j]), abs(y_new[j]))
                err += (e / sc) ** 2
            if not finite:
                if h <= hmin:
                    status = NONFINITE
                    break
                h *= 0.2
                n_reject += 1
                continue
            err = np.sqrt(err / n)
            if err <= 1.0:
                t = tf if last else t + hs
                for j in range(n):
                    y[j] = y_new[j]
                    k1[j] = k7[j]
                n_accept += 1
                r2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2]
                if record:
                    if n_rec == cap:
                        cap *= 2
                        ts2 = np.empty(cap)
                        ys2 = np.empty((cap, n))
                        ts2[:n_rec] = ts[:n_rec]
                        ys2[:n_rec] = ys[:n_rec]
                        ts = ts2
                        ys = ys2
                    ts[n_rec] = t
                    ys[n_rec] = y
                    n_rec += 1
                if r2 < r_min * r_min:
                    status = SUN_IMPACT
                    break
                if last:
                    break
                fac = 10.0 if err == 0.0 else min(10.0, max(0.2, 0.9 * err ** -0.2))
                h *= fac
            else:
                h *= max(0.2, 0.9 * err ** -0.2)
                n_reject += 1

        if not record:
            ts[1] = t
            ys[1] = y
            n_rec = 2
        return status, t, y, nfev, n_accept, n_reject, ts[:n_rec], ys[:n_rec]

    # closures over a dispatcher are not cacheable across processes
    return njit(dopri54) if jit else dopri54

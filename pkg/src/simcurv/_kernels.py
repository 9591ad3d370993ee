"""Hot numerical kernels: model right-hand sides and the adaptive integrator.

Everything here is called inside the innermost loops of shooting solves and
curvature grid sweeps, so the functions are written in numba-compilable
style (explicit loops, preallocated arrays, integer model dispatch) and get
``@njit`` applied via :mod:`simcurv.backend`.

Model ids double as indices into the registry in :mod:`simcurv.systems`;
the ``par`` argument is the packed parameter vector of the model (see
``SlowFastSystem.kernel_params``).
"""

import numpy as np

from .backend import jit

DAVIS_SKODJE = 0
KUEHN = 1
ENZYME = 2
DS21 = 3
MODEL32 = 4

# full-system mode and slow-block-with-frozen-fast-variables mode
RHS_FULL = 0
RHS_SLOW_FROZEN = 1

# integrator status codes
OK = 0
STEP_UNDERFLOW = 1
MAX_STEPS_EXCEEDED = 2
NONFINITE_RHS = 3

# Dormand-Prince 5(4) tableau with the quartic dense-output polynomial.
_C = np.array([0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0])
_A = np.array(
    [
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    ]
)
_B = np.array([35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0])
# difference between the 5th and embedded 4th order weights
_E = np.array(
    [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ]
)
# dense output: y(t0 + s*h) = y0 + h * (K^T P) @ (s, s^2, s^3, s^4)
_P = np.array(
    [
        [
            1.0,
            -8048581381.0 / 2820520608.0,
            8663915743.0 / 2820520608.0,
            -12715105075.0 / 11282082432.0,
        ],
        [0.0, 0.0, 0.0, 0.0],
        [
            0.0,
            131558114200.0 / 32700410799.0,
            -68118460800.0 / 10900136933.0,
            87487479700.0 / 32700410799.0,
        ],
        [
            0.0,
            -1754552775.0 / 470086768.0,
            14199869525.0 / 1410260304.0,
            -10690763975.0 / 1880347072.0,
        ],
        [
            0.0,
            127303824393.0 / 49829197408.0,
            -318862633887.0 / 49829197408.0,
            701980252875.0 / 199316789632.0,
        ],
        [
            0.0,
            -282668133.0 / 205662961.0,
            2019193451.0 / 616988883.0,
            -1453857185.0 / 822651844.0,
        ],
        [0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0],
    ]
)


def _rhs_into(model, par, s, mode, out):
    """Right-hand side in the model's published time convention.

    ``mode == RHS_SLOW_FROZEN`` zeroes the fast block, which integrates the
    slow subsystem with the fast variables frozen at their current values
    (used for the shooting initial guess).
    """
    if model == DAVIS_SKODJE:
        gam = par[0]
        x = s[0]
        y = s[1]
        out[0] = -x
        if mode == RHS_FULL:
            out[1] = -gam * y + ((gam - 1.0) * x + gam * x * x) / ((1.0 + x) * (1.0 + x))
        else:
            out[1] = 0.0
    elif model == KUEHN:
        eps = par[0]
        x = s[0]
        y = s[1]
        out[0] = -eps * x
        if mode == RHS_FULL:
            out[1] = x * x - y
        else:
            out[1] = 0.0
    elif model == ENZYME:
        eps = par[0]
        kap = par[1]
        lam = par[2]
        x = s[0]
        y = s[1]
        out[0] = eps * (-x + (x + kap - lam) * y)
        if mode == RHS_FULL:
            out[1] = x - (x + kap) * y
        else:
            out[1] = 0.0
    elif model == DS21:
        gam = par[0]
        x1 = s[0]
        x2 = s[1]
        y = s[2]
        out[0] = -x1
        out[1] = -2.0 * x2
        if mode == RHS_FULL:
            out[2] = (
                -gam * y
                + ((gam - 1.0) * x1 + gam * x1 * x1) / ((1.0 + x1) * (1.0 + x1))
                + (2.0 * (gam - 2.0) * x2 + 2.0 * gam * x2 * x2) / ((1.0 + x2) * (1.0 + x2))
            )
        else:
            out[2] = 0.0
    else:  # MODEL32
        eps = par[0]
        x1 = s[0]
        x2 = s[1]
        x3 = s[2]
        y1 = s[3]
        y2 = s[4]
        out[0] = -eps * x1
        out[1] = -2.0 * eps * x2
        out[2] = -3.0 * eps * x3
        if mode == RHS_FULL:
            out[3] = 2.0 * x1 * x1 + x2 * x2 * x3 - 4.0 * y1
            out[4] = 3.0 * x1 ** 4 + x2 ** 3 - 3.0 * y2
        else:
            out[3] = 0.0
            out[4] = 0.0


def _jac_into(model, par, s, out):
    """Analytic Jacobian of the full right-hand side."""
    n = s.shape[0]
    for i in range(n):
        for j in range(n):
            out[i, j] = 0.0
    if model == DAVIS_SKODJE:
        gam = par[0]
        x = s[0]
        out[0, 0] = -1.0
        out[1, 0] = ((gam - 1.0) + (gam + 1.0) * x) / ((1.0 + x) ** 3)
        out[1, 1] = -gam
    elif model == KUEHN:
        eps = par[0]
        x = s[0]
        out[0, 0] = -eps
        out[1, 0] = 2.0 * x
        out[1, 1] = -1.0
    elif model == ENZYME:
        eps = par[0]
        kap = par[1]
        lam = par[2]
        x = s[0]
        y = s[1]
        out[0, 0] = eps * (-1.0 + y)
        out[0, 1] = eps * (x + kap - lam)
        out[1, 0] = 1.0 - y
        out[1, 1] = -(x + kap)
    elif model == DS21:
        gam = par[0]
        x1 = s[0]
        x2 = s[1]
        out[0, 0] = -1.0
        out[1, 1] = -2.0
        out[2, 0] = ((gam - 1.0) + (gam + 1.0) * x1) / ((1.0 + x1) ** 3)
        out[2, 1] = 2.0 * ((gam - 2.0) + (gam + 2.0) * x2) / ((1.0 + x2) ** 3)
        out[2, 2] = -gam
    else:  # MODEL32
        eps = par[0]
        x1 = s[0]
        x2 = s[1]
        x3 = s[2]
        out[0, 0] = -eps
        out[1, 1] = -2.0 * eps
        out[2, 2] = -3.0 * eps
        out[3, 0] = 4.0 * x1
        out[3, 1] = 2.0 * x2 * x3
        out[3, 2] = x2 * x2
        out[3, 3] = -4.0
        out[4, 0] = 12.0 * x1 ** 3
        out[4, 1] = 3.0 * x2 * x2
        out[4, 4] = -3.0


rhs_into = jit(_rhs_into)
jac_into = jit(_jac_into)


def _error_norm(err, y_old, y_new, rtol, atol):
    n = err.shape[0]
    acc = 0.0
    for i in range(n):
        sc = atol + rtol * max(abs(y_old[i]), abs(y_new[i]))
        r = err[i] / sc
        acc += r * r
    return np.sqrt(acc / n)


error_norm = jit(_error_norm)


def _initial_step(model, par, y0, f0, direction, rtol, atol, mode):
    # standard two-probe heuristic (Hairer-Norsett-Wanner I.II.4)
    n = y0.shape[0]
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y0[i])
        d0 += (y0[i] / sc) ** 2
        d1 += (f0[i] / sc) ** 2
    d0 = np.sqrt(d0 / n)
    d1 = np.sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    y1 = np.empty(n)
    f1 = np.empty(n)
    for i in range(n):
        y1[i] = y0[i] + h0 * direction * f0[i]
    rhs_into(model, par, y1, mode, f1)
    d2 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y0[i])
        d2 += ((f1[i] - f0[i]) / sc) ** 2
    d2 = np.sqrt(d2 / n) / h0
    dm = max(d1, d2)
    if dm <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / dm) ** 0.2
    return min(100.0 * h0, h1)


initial_step = jit(_initial_step)


def _integrate(model, par, y0, t0, t1, rtol, atol, h_init, h_min, max_steps, mode):
    """Adaptive Dormand-Prince 5(4) sweep from t0 to t1 (either direction).

    Returns ``(status, ts, ys, qs)`` where ``ts``/``ys`` hold the accepted
    nodes and ``qs[i]`` is the dense-output coefficient matrix (n x 4) of
    the step from node i to node i+1.
    """
    n = y0.shape[0]
    cap = 256
    ts = np.empty(cap)
    ys = np.empty((cap, n))
    qs = np.empty((cap, n, 4))
    ts[0] = t0
    for i in range(n):
        ys[0, i] = y0[i]
    count = 1

    if t1 == t0:
        return OK, ts[:1].copy(), ys[:1].copy(), qs[:0].copy()

    direction = 1.0 if t1 > t0 else -1.0
    span = abs(t1 - t0)

    K = np.empty((7, n))
    y = y0.copy()
    ystage = np.empty(n)
    ynew = np.empty(n)
    err = np.empty(n)
    t = t0

    rhs_into(model, par, y, mode, K[0])
    for i in range(n):
        if not np.isfinite(K[0, i]):
            return NONFINITE_RHS, ts[:count].copy(), ys[:count].copy(), qs[: count - 1].copy()

    if h_init > 0.0:
        h = min(h_init, span)
    else:
        h = min(initial_step(model, par, y, K[0], direction, rtol, atol, mode), span)

    nsteps = 0
    while direction * (t1 - t) > 0.0:
        if nsteps >= max_steps:
            return MAX_STEPS_EXCEEDED, ts[:count].copy(), ys[:count].copy(), qs[: count - 1].copy()
        if h < h_min:
            return STEP_UNDERFLOW, ts[:count].copy(), ys[:count].copy(), qs[: count - 1].copy()
        last = False
        if h >= direction * (t1 - t):
            h = direction * (t1 - t)
            last = True
        hs = h * direction

        for st in range(1, 7):
            for i in range(n):
                acc = 0.0
                for j in range(st):
                    if st < 6:
                        acc += _A[st, j] * K[j, i]
                    else:
                        acc += _B[j] * K[j, i]
                ystage[i] = y[i] + hs * acc
            rhs_into(model, par, ystage, mode, K[st])
            if st == 6:
                for i in range(n):
                    ynew[i] = ystage[i]

        bad = False
        for i in range(n):
            if not np.isfinite(K[6, i]) or not np.isfinite(ynew[i]):
                bad = True
        if bad:
            return NONFINITE_RHS, ts[:count].copy(), ys[:count].copy(), qs[: count - 1].copy()

        for i in range(n):
            acc = 0.0
            for j in range(7):
                acc += _E[j] * K[j, i]
            err[i] = hs * acc
        enorm = error_norm(err, y, ynew, rtol, atol)
        nsteps += 1

        if enorm <= 1.0:
            if count == cap:
                cap2 = cap * 2
                ts2 = np.empty(cap2)
                ys2 = np.empty((cap2, n))
                qs2 = np.empty((cap2, n, 4))
                for a in range(count):
                    ts2[a] = ts[a]
                    for i in range(n):
                        ys2[a, i] = ys[a, i]
                for a in range(count - 1):
                    for i in range(n):
                        for b in range(4):
                            qs2[a, i, b] = qs[a, i, b]
                ts = ts2
                ys = ys2
                qs = qs2
                cap = cap2
            # dense coefficients: Q = K^T @ P, scaled by the signed step
            for i in range(n):
                for b in range(4):
                    acc = 0.0
                    for j in range(7):
                        acc += K[j, i] * _P[j, b]
                    qs[count - 1, i, b] = hs * acc
            t = t1 if last else t + hs
            ts[count] = t
            for i in range(n):
                ys[count, i] = ynew[i]
                y[i] = ynew[i]
                K[0, i] = K[6, i]  # FSAL
            count += 1
            if enorm == 0.0:
                factor = 10.0
            else:
                factor = min(10.0, max(0.2, 0.9 * enorm ** -0.2))
            h = h * factor
        else:
            h = h * min(1.0, max(0.2, 0.9 * enorm ** -0.2))

    return OK, ts[:count].copy(), ys[:count].copy(), qs[: count - 1].copy()


integrate = jit(_integrate)

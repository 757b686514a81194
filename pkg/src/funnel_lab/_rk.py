"""Adaptive Dormand-Prince 5(4) core, jitted for tight inner loops.

The drivers below take the right-hand side as a jitted function argument,
so each distinct rhs compiles one specialization on first use.  Two entry
points cover the two workloads:

  - ``advance``: endpoint only, no storage; used by renormalized exponent
    runs and shooting iterations where the caller loops over short spans.
  - ``run_sampled``: uniform samples at ``dt_sample`` plus refined section
    crossings, both reconstructed from the local quartic interpolant of
    each accepted step, so no per-step history is kept.

Status codes: 0 ok, 1 divergence guard (|component| > limit), 2 step-size
underflow.
"""

import numpy as np
from numba import njit

# Butcher tableau (Dormand-Prince 5(4), FSAL)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.zeros((7, 7))
_A[1, 0] = 1 / 5
_A[2, :2] = 3 / 40, 9 / 40
_A[3, :3] = 44 / 45, -56 / 15, 32 / 9
_A[4, :4] = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A[5, :5] = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_A[6, :6] = 35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_B = _A[6, :].copy()  # 5th order weights; FSAL: k7 = f(y_new)
# 5th-minus-4th order error weights, applied to k1..k7
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
               -17253 / 339200, 22 / 525, -1 / 40])
# quartic interpolant coefficients (Shampine); y(t+h*s) = y + h*K^T P [s,s^2,s^3,s^4]
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608,
     -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933,
     87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304,
     -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408,
     701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883,
     -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423]])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_ORDER_EXP = -1.0 / 5.0

OK = 0
DIVERGED = 1
UNDERFLOW = 2


@njit(cache=True)
def _initial_step(rhs, t0, y0, f0, t_end, rtol, atol, args):
    # standard two-trial-step heuristic
    n = y0.size
    sc = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.sum((y0 / sc) ** 2) / n)
    d1 = np.sqrt(np.sum((f0 / sc) ** 2) / n)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = np.empty(n)
    rhs(t0 + h0, y1, f1, args)
    d2 = np.sqrt(np.sum(((f1 - f0) / sc) ** 2) / n) / h0
    dm = max(d1, d2)
    h1 = max(1e-6, h0 * 1e-3) if dm <= 1e-15 else (0.01 / dm) ** 0.2
    return min(100.0 * h0, h1, abs(t_end - t0))


@njit(cache=True)
def _try_step(rhs, t, y, f1, h, k, y_new, err, rtol, atol, args):
    """One candidate step; fills k (7 x n), y_new, err. Returns error norm."""
    n = y.size
    for i in range(n):
        k[0, i] = f1[i]
    for s in range(1, 7):
        for i in range(n):
            acc = 0.0
            for j in range(s):
                acc += _A[s, j] * k[j, i]
            y_new[i] = y[i] + h * acc
        rhs(t + _C[s] * h, y_new, k[s], args)
    # stage 6 already produced the 5th order solution in y_new (FSAL row)
    norm = 0.0
    for i in range(n):
        e = 0.0
        for s in range(7):
            e += _E[s] * k[s, i]
        e *= h
        sc = atol + rtol * max(abs(y[i]), abs(y_new[i]))
        err[i] = e
        norm += (e / sc) ** 2
    return np.sqrt(norm / n)


@njit(cache=True)
def _dense_coef(k, h, q):
    """Quartic coefficients q (n x 4) for the just-accepted step."""
    n = k.shape[1]
    for i in range(n):
        for c in range(4):
            acc = 0.0
            for s in range(7):
                acc += k[s, i] * _P[s, c]
            q[i, c] = h * acc


@njit(cache=True)
def _dense_eval(y0, q, s, out):
    for i in range(y0.size):
        out[i] = y0[i] + s * (q[i, 0] + s * (q[i, 1] + s * (q[i, 2] + s * q[i, 3])))


@njit(cache=True)
def advance(rhs, t0, y0, t_end, rtol, atol, args, h0, guard):
    """Endpoint integration. Returns (status, t_reached, y_end, h_last, n_accepted)."""
    n = y0.size
    t = t0
    y = y0.copy()
    f1 = np.empty(n)
    rhs(t, y, f1, args)
    direction = 1.0 if t_end >= t0 else -1.0
    h = abs(h0) if h0 > 0.0 else _initial_step(rhs, t0, y, f1, t_end, rtol, atol, args)
    k = np.empty((7, n))
    y_new = np.empty(n)
    err = np.empty(n)
    n_acc = 0
    while direction * (t_end - t) > 0.0:
        h = min(h, abs(t_end - t))
        if h < 1e-14 * max(1.0, abs(t)):
            return UNDERFLOW, t, y, h, n_acc
        norm = _try_step(rhs, t, y, f1, direction * h, k, y_new, err, rtol, atol, args)
        if norm <= 1.0:
            t = t_end if abs(t_end - t) <= h * (1.0 + 1e-12) else t + direction * h
            for i in range(n):
                y[i] = y_new[i]
                f1[i] = k[6, i]
            n_acc += 1
            for i in range(n):
                if abs(y[i]) > guard:
                    return DIVERGED, t, y, h, n_acc
            factor = _MAX_FACTOR if norm == 0.0 else min(
                _MAX_FACTOR, _SAFETY * norm ** _ORDER_EXP)
            h *= factor
        else:
            h *= max(_MIN_FACTOR, _SAFETY * norm ** _ORDER_EXP)
    return OK, t, y, h, n_acc


@njit(cache=True)
def _grow(arr, need):
    if need <= arr.shape[0]:
        return arr
    cap = arr.shape[0]
    while cap < need:
        cap *= 2
    if arr.ndim == 1:
        out = np.empty(cap)
        out[:arr.shape[0]] = arr
    else:
        out = np.empty((cap, arr.shape[1]))
        out[:arr.shape[0], :] = arr
    return out


@njit(cache=True)
def _refine_crossing(y, q, g_c, g_d, s_lo, s_hi, tmp):
    """Bisection for g(dense(s)) = 0 on [s_lo, s_hi]; returns s root."""
    _dense_eval(y, q, s_lo, tmp)
    g_lo = g_d
    for i in range(y.size):
        g_lo += g_c[i] * tmp[i]
    for _ in range(80):
        s_mid = 0.5 * (s_lo + s_hi)
        _dense_eval(y, q, s_mid, tmp)
        g_mid = g_d
        for i in range(y.size):
            g_mid += g_c[i] * tmp[i]
        if (g_lo <= 0.0) == (g_mid <= 0.0):
            s_lo, g_lo = s_mid, g_mid
        else:
            s_hi = s_mid
        if s_hi - s_lo < 1e-16:
            break
    return 0.5 * (s_lo + s_hi)


@njit(cache=True)
def run_sampled(rhs, t0, y0, t_end, rtol, atol, args, dt_sample,
                g_c, g_d, g_direction, guard):
    """Integrate with uniform sampling and refined crossings of g(y)=0.

    g_c is the linear part of the affine section functional (size 0 disables
    event detection), g_d the offset, g_direction +1/-1/0 the admitted
    crossing sign.  Returns (status, t_reached, y_end,
    sample_t, sample_y, n_samples, event_t, event_y, n_events, n_accepted).
    """
    n = y0.size
    t = t0
    y = y0.copy()
    f1 = np.empty(n)
    rhs(t, y, f1, args)
    h = _initial_step(rhs, t0, y, f1, t_end, rtol, atol, args)
    k = np.empty((7, n))
    y_new = np.empty(n)
    err = np.empty(n)
    q = np.empty((n, 4))
    tmp = np.empty(n)

    cap_s = 4096
    sample_t = np.empty(cap_s)
    sample_y = np.empty((cap_s, n))
    n_s = 0
    sample_t[0] = t
    sample_y[0, :] = y
    n_s = 1
    next_sample = t0 + dt_sample

    cap_e = 1024
    event_t = np.empty(cap_e)
    event_y = np.empty((cap_e, n))
    n_e = 0
    watch = g_c.size == n
    g_prev = g_d
    if watch:
        for i in range(n):
            g_prev += g_c[i] * y[i]

    n_acc = 0
    status = OK
    while t < t_end:
        h = min(h, t_end - t)
        if h < 1e-14 * max(1.0, abs(t)):
            status = UNDERFLOW
            break
        norm = _try_step(rhs, t, y, f1, h, k, y_new, err, rtol, atol, args)
        if norm > 1.0:
            h *= max(_MIN_FACTOR, _SAFETY * norm ** _ORDER_EXP)
            continue
        _dense_coef(k, h, q)
        t_new = t + h if t_end - t > h * (1.0 + 1e-12) else t_end

        # uniform samples inside the accepted step
        while next_sample <= t_new:
            s = (next_sample - t) / h
            sample_t = _grow(sample_t, n_s + 1)
            sample_y = _grow(sample_y, n_s + 1)
            _dense_eval(y, q, s, tmp)
            sample_t[n_s] = next_sample
            for i in range(n):
                sample_y[n_s, i] = tmp[i]
            n_s += 1
            next_sample += dt_sample

        # section crossing inside the accepted step
        if watch:
            g_new = g_d
            for i in range(n):
                g_new += g_c[i] * y_new[i]
            crossed = (g_prev <= 0.0) != (g_new <= 0.0)
            wanted = (g_direction == 0
                      or (g_direction > 0 and g_new > g_prev)
                      or (g_direction < 0 and g_new < g_prev))
            if crossed and wanted and g_prev != 0.0:
                s_root = _refine_crossing(y, q, g_c, g_d, 0.0, 1.0, tmp)
                event_t = _grow(event_t, n_e + 1)
                event_y = _grow(event_y, n_e + 1)
                _dense_eval(y, q, s_root, tmp)
                event_t[n_e] = t + s_root * h
                for i in range(n):
                    event_y[n_e, i] = tmp[i]
                n_e += 1
            g_prev = g_new

        t = t_new
        for i in range(n):
            y[i] = y_new[i]
            f1[i] = k[6, i]
        n_acc += 1
        for i in range(n):
            if abs(y[i]) > guard:
                status = DIVERGED
                break
        if status != OK:
            break
        factor = _MAX_FACTOR if norm == 0.0 else min(
            _MAX_FACTOR, _SAFETY * norm ** _ORDER_EXP)
        h *= factor

    return (status, t, y, sample_t[:n_s], sample_y[:n_s], n_s,
            event_t[:n_e], event_y[:n_e], n_e, n_acc)

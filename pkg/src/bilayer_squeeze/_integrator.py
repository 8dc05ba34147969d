"""Compiled adaptive Runge-Kutta core for the classical spin dynamics.

Dormand-Prince 5(4) embedded pair with standard error control, specialised
to the bilayer precession equations ds/dt = s x B.  The integrator steps
exactly onto every output time (no dense-output interpolation), which keeps
the recorded observables at full integration accuracy; the natural step size
is carried across output boundaries, so a coarse output grid costs nothing.

Everything here is deterministic: fixed coefficients, no fastmath, no
threading.  The JIT cache makes recompilation a one-off per machine.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# Dormand-Prince 5(4) tableau (FSAL: the 7th stage is the next step's first)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.zeros((7, 7))
_A[1, 0] = 1 / 5
_A[2, :2] = (3 / 40, 9 / 40)
_A[3, :3] = (44 / 45, -56 / 15, 32 / 9)
_A[4, :4] = (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729)
_A[5, :5] = (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656)
_A[6, :6] = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
_B = _A[6].copy()  # 5th-order solution weights
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B - _B4  # local error weights; _E[6] = -1/40

MAX_FACTOR = 10.0
MIN_FACTOR = 0.2
SAFETY = 0.9


@njit(cache=True)
def _field(s, intra, inter, out):
    """Effective field B_i; interlayer couplings act on x, y only."""
    b_full = intra @ s
    b_xy = inter @ s
    n = s.shape[0]
    for i in range(n):
        out[i, 0] = b_full[i, 0] + b_xy[i, 0]
        out[i, 1] = b_full[i, 1] + b_xy[i, 1]
        out[i, 2] = b_full[i, 2]


@njit(cache=True)
def _rhs(s, intra, inter, b, out):
    _field(s, intra, inter, b)
    n = s.shape[0]
    for i in range(n):
        out[i, 0] = s[i, 1] * b[i, 2] - s[i, 2] * b[i, 1]
        out[i, 1] = s[i, 2] * b[i, 0] - s[i, 0] * b[i, 2]
        out[i, 2] = s[i, 0] * b[i, 1] - s[i, 1] * b[i, 0]


@njit(cache=True)
def _energy(s, intra, inter):
    b_full = intra @ s
    b_xy = inter @ s
    e = 0.0
    n = s.shape[0]
    for i in range(n):
        e += 0.5 * (
            s[i, 0] * b_full[i, 0]
            + s[i, 1] * b_full[i, 1]
            + s[i, 2] * b_full[i, 2]
            + s[i, 0] * b_xy[i, 0]
            + s[i, 1] * b_xy[i, 1]
        )
    return e


SPIN_NORM = 0.8660254037844386  # sqrt(3)/2, conserved by the exact flow


@njit(cache=True)
def _record(s, n_a, intra, inter, out, col):
    """Store scalar observables in out[:, col].

    Rows: O^-, O^+, Sz_A, Sz_B, energy, max spin-norm deviation, and the
    single-site second moments sum_i o_i^2 of the O^- and O^+ terms (used by
    the symmetric-ordering variance diagnostics).
    """
    n = s.shape[0]
    sx_a = 0.0
    sy_a = 0.0
    sz_a = 0.0
    sx_b = 0.0
    sy_b = 0.0
    sz_b = 0.0
    diag_m = 0.0
    diag_p = 0.0
    for i in range(n_a):
        sx_a += s[i, 0]
        sy_a += s[i, 1]
        sz_a += s[i, 2]
        diag_m += s[i, 0] ** 2
        diag_p += s[i, 1] ** 2
    for i in range(n_a, n):
        sx_b += s[i, 0]
        sy_b += s[i, 1]
        sz_b += s[i, 2]
        diag_m += s[i, 1] ** 2
        diag_p += s[i, 0] ** 2
    out[0, col] = sx_a + sy_b
    out[1, col] = sy_a + sx_b
    out[2, col] = sz_a
    out[3, col] = sz_b
    out[4, col] = _energy(s, intra, inter)
    worst = 0.0
    for i in range(n):
        dev = abs(np.sqrt(s[i, 0] ** 2 + s[i, 1] ** 2 + s[i, 2] ** 2) - SPIN_NORM)
        if dev > worst:
            worst = dev
    out[5, col] = worst
    out[6, col] = diag_m
    out[7, col] = diag_p


@njit(cache=True)
def _error_norm(err, y0, y1, rtol, atol):
    n = err.shape[0]
    acc = 0.0
    for i in range(n):
        for c in range(3):
            scale = atol + rtol * max(abs(y0[i, c]), abs(y1[i, c]))
            acc += (err[i, c] / scale) ** 2
    return np.sqrt(acc / (3 * n))


@njit(cache=True)
def integrate_observables(s0, intra, inter, t_grid, rtol, atol):
    """Integrate one trajectory, recording observables at every grid time.

    Returns (obs, status, t_fail): obs has shape (8, len(t_grid)); status is
    0 on success, 1 on step-size underflow at time t_fail.
    """
    n = s0.shape[0]
    n_t = t_grid.shape[0]
    obs = np.zeros((8, n_t))
    s = s0.copy()
    b = np.empty((n, 3))
    k = np.empty((7, n, 3))
    y_stage = np.empty((n, 3))
    y_new = np.empty((n, 3))
    err = np.empty((n, 3))

    _record(s, n // 2, intra, inter, obs, 0)
    if n_t == 1:
        return obs, 0, 0.0

    _rhs(s, intra, inter, b, k[0])

    # initial step heuristic (scipy-style two-probe estimate)
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        for c in range(3):
            scale = atol + rtol * abs(s[i, c])
            d0 += (s[i, c] / scale) ** 2
            d1 += (k[0, i, c] / scale) ** 2
    d0 = np.sqrt(d0 / (3 * n))
    d1 = np.sqrt(d1 / (3 * n))
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    for i in range(n):
        for c in range(3):
            y_stage[i, c] = s[i, c] + h0 * k[0, i, c]
    _rhs(y_stage, intra, inter, b, k[1])
    d2 = 0.0
    for i in range(n):
        for c in range(3):
            scale = atol + rtol * abs(s[i, c])
            d2 += ((k[1, i, c] - k[0, i, c]) / scale) ** 2
    d2 = np.sqrt(d2 / (3 * n)) / h0
    dm = max(d1, d2)
    if dm <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / dm) ** 0.2
    h = min(100.0 * h0, h1)
    h = min(h, t_grid[n_t - 1] - t_grid[0])

    t = t_grid[0]
    for seg in range(1, n_t):
        t_end = t_grid[seg]
        while t < t_end:
            truncated = False
            h_step = h
            if t + h_step >= t_end:
                h_step = t_end - t
                truncated = True
            if h_step < 1e-14 * max(1.0, abs(t)):
                return obs, 1, t
            # stages 2..7 (k[0] is FSAL from the previous accepted step)
            for stage in range(1, 7):
                for i in range(n):
                    ax = 0.0
                    ay = 0.0
                    az = 0.0
                    for prev in range(stage):
                        aa = _A[stage, prev]
                        if aa != 0.0:
                            ax += aa * k[prev, i, 0]
                            ay += aa * k[prev, i, 1]
                            az += aa * k[prev, i, 2]
                    y_stage[i, 0] = s[i, 0] + h_step * ax
                    y_stage[i, 1] = s[i, 1] + h_step * ay
                    y_stage[i, 2] = s[i, 2] + h_step * az
                _rhs(y_stage, intra, inter, b, k[stage])
            # 5th-order solution is the last stage argument (FSAL pair)
            for i in range(n):
                for c in range(3):
                    y_new[i, c] = y_stage[i, c]
            for i in range(n):
                for c in range(3):
                    acc = 0.0
                    for stage in range(7):
                        ee = _E[stage]
                        if ee != 0.0:
                            acc += ee * k[stage, i, c]
                    err[i, c] = h_step * acc
            enorm = _error_norm(err, s, y_new, rtol, atol)
            if enorm <= 1.0:
                t = t_end if truncated else t + h_step
                for i in range(n):
                    for c in range(3):
                        s[i, c] = y_new[i, c]
                        k[0, i, c] = k[6, i, c]
                if enorm == 0.0:
                    factor = MAX_FACTOR
                else:
                    factor = min(MAX_FACTOR, max(MIN_FACTOR, SAFETY * enorm ** (-0.2)))
                if truncated:
                    h = max(h, h_step * factor)
                else:
                    h = h_step * factor
            else:
                h = h_step * max(MIN_FACTOR, SAFETY * enorm ** (-0.2))
        _record(s, n // 2, intra, inter, obs, seg)
    return obs, 0, 0.0

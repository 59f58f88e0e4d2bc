"""Compiled integration kernels.

Orbits are integrated in global Cartesian charts (no polar-chart poles): the
Jaynes-Cummings state is (u, v, x, y, z) on R^2 x S^2, the reduced-C^4
systems carry the four complex coordinates as (p_k, q_k). Unwrapped angles
and the running primitive integral ride along as quadrature states so the
step controller resolves fast phase swings near the coordinate axes, which
is exactly where the interesting monodromy lives.

Angle convention: phi_k' = +dH/dI_k, equivalently zdot_k = 2i dH/dzbar_k.
"""

from __future__ import annotations

import numpy as np
from numba import njit

SYS_JC = 0
SYS_FLAP2EE = 1
SYS_PLEAT = 2
SYS_CURLED = 3
SYS_CURLED_FLAP = 4
SYS_FAMILY_ABC = 5

STATE_DIM = {SYS_JC: 8}


@njit(cache=True)
def rhs(sys_id, params, y, dy):
    """Time derivative into dy. Layout: JC (u,v,x,y,z,phi,theta,alpha);
    reduced systems (p1..p4, q1..q4, phi1..phi4, alpha)."""
    if sys_id == SYS_JC:
        g = params[0]
        u, v, xx, yy, zz = y[0], y[1], y[2], y[3], y[4]
        du = -yy / 2.0
        dv = xx / 2.0
        dx = zz * v / 2.0 - 2.0 * g * zz * yy
        dyc = -zz * u / 2.0 + 2.0 * g * zz * xx
        dz = (yy * u - xx * v) / 2.0
        dy[0] = du
        dy[1] = dv
        dy[2] = dx
        dy[3] = dyc
        dy[4] = dz
        r2u = u * u + v * v
        r2x = xx * xx + yy * yy
        dphi = (u * dv - v * du) / r2u if r2u > 0.0 else 0.0
        dtheta = (xx * dyc - yy * dx) / r2x if r2x > 0.0 else 0.0
        dy[5] = dphi
        dy[6] = dtheta
        dy[7] = 0.5 * (u * dv - v * du) + zz * dtheta
        return

    z1 = complex(y[0], y[4])
    z2 = complex(y[1], y[5])
    z3 = complex(y[2], y[6])
    z4 = complex(y[3], y[7])
    g1 = 0.0 + 0.0j
    g2 = 0.0 + 0.0j
    g3 = 0.0 + 0.0j
    g4 = 0.0 + 0.0j
    if sys_id == SYS_FLAP2EE:
        t = params[0]
        r = 0.5 * ((z3 * z3.conjugate()).real - (z4 * z4.conjugate()).real)
        jj = 0.5 * ((z2 * z2.conjugate()).real + (z3 * z3.conjugate()).real)
        cx = 0.15 * t  # (t/3)(9/20)
        g1 = cx * 0.5 * z2.conjugate() * z3 * z4.conjugate()
        g2 = (cx * 0.5 * z1.conjugate() * z3 * z4.conjugate()
              + (t / 3.0) * z2 * (r + 2.0))
        g3 = ((1.0 - t) * 0.5 * z3
              + cx * 0.5 * z1 * z2 * z4
              + (t / 3.0) * (z3 * (r + 2.0) + (2.0 * jj - 3.0) * 0.5 * z3)
              + 2.0 * t * z3 * (z4 * z4.conjugate()).real)
        g4 = (-(1.0 - t) * 0.5 * z4
              + cx * 0.5 * z1.conjugate() * z2.conjugate() * z3
              - (t / 3.0) * (2.0 * jj - 3.0) * 0.5 * z4
              + 2.0 * t * (z3 * z3.conjugate()).real * z4)
    elif sys_id == SYS_PLEAT:
        t = params[0]
        g1 = t * 0.5 * z3 * z4.conjugate() + 2.0 * t * z1 * (z3 * z3.conjugate()).real
        g3 = ((1.0 - 2.0 * t) * 0.5 * z3
              + t * 0.5 * z1 * z4
              + 2.0 * t * (z1 * z1.conjugate()).real * z3)
        g4 = t * 0.5 * z1.conjugate() * z3
    elif sys_id == SYS_CURLED or sys_id == SYS_CURLED_FLAP:
        w = 1.0 if sys_id == SYS_CURLED else 0.25
        g1 = w * z1.conjugate() * z3 * z4.conjugate()
        g3 = w * 0.5 * z1 * z1 * z4
        g4 = w * 0.5 * z1.conjugate() * z1.conjugate() * z3
        if sys_id == SYS_CURLED_FLAP:
            g3 += 0.75 * 0.5 * z3
    else:  # SYS_FAMILY_ABC
        a = params[0]
        b = params[1]
        c = params[2]
        s2 = 0.5 / np.sqrt(2.0)
        r = 0.5 * (z3 * z3.conjugate()).real
        g1 = s2 * z2.conjugate() * z3 * z4.conjugate()
        g2 = s2 * z1.conjugate() * z3 * z4.conjugate()
        g3 = s2 * z1 * z2 * z4 + (a + 2.0 * b * r + 3.0 * c * r * r) * 0.5 * z3
        g4 = s2 * z1.conjugate() * z2.conjugate() * z3

    dz1 = 2.0j * g1
    dz2 = 2.0j * g2
    dz3 = 2.0j * g3
    dz4 = 2.0j * g4
    dy[0] = dz1.real
    dy[1] = dz2.real
    dy[2] = dz3.real
    dy[3] = dz4.real
    dy[4] = dz1.imag
    dy[5] = dz2.imag
    dy[6] = dz3.imag
    dy[7] = dz4.imag
    alpha = 0.0
    for k in range(4):
        p = y[k]
        q = y[4 + k]
        if k == 0:
            dp, dq = dz1.real, dz1.imag
        elif k == 1:
            dp, dq = dz2.real, dz2.imag
        elif k == 2:
            dp, dq = dz3.real, dz3.imag
        else:
            dp, dq = dz4.real, dz4.imag
        wedge = p * dq - q * dp
        alpha += 0.5 * wedge
        r2 = p * p + q * q
        dy[8 + k] = wedge / r2 if r2 > 0.0 else 0.0
    dy[12] = alpha


@njit(cache=True)
def event_value(sys_id, y):
    """Section function: the imaginary part of the reduced invariant whose
    upward zero crossing marks one revolution of the reduced orbit."""
    if sys_id == SYS_JC:
        return y[1] * y[2] - y[0] * y[3]  # T = v x - u y
    z1 = complex(y[0], y[4])
    z2 = complex(y[1], y[5])
    z3 = complex(y[2], y[6])
    z4 = complex(y[3], y[7])
    if sys_id == SYS_FLAP2EE:
        return (z1.conjugate() * z2.conjugate() * z3 * z4.conjugate()).imag
    if sys_id == SYS_PLEAT:
        return (z1.conjugate() * z3 * z4.conjugate()).imag
    if sys_id == SYS_CURLED or sys_id == SYS_CURLED_FLAP:
        return (z1.conjugate() * z1.conjugate() * z3 * z4.conjugate()).imag
    return (z1 * z2 * z3.conjugate() * z4).imag


@njit(cache=True)
def event_rate(sys_id, params, y):
    scratch = np.empty(y.size)
    rhs(sys_id, params, y, scratch)
    eps = 1e-8
    probe = y + eps * scratch
    return (event_value(sys_id, probe) - event_value(sys_id, y)) / eps


@njit(cache=True)
def section_cos(sys_id, y):
    """Real part of the section monomial (S for the sphere model, X else).
    A return must land on the section branch it started from."""
    if sys_id == SYS_JC:
        return y[0] * y[2] + y[1] * y[3]  # S = u x + v y
    z1 = complex(y[0], y[4])
    z2 = complex(y[1], y[5])
    z3 = complex(y[2], y[6])
    z4 = complex(y[3], y[7])
    if sys_id == SYS_FLAP2EE:
        return (z1.conjugate() * z2.conjugate() * z3 * z4.conjugate()).real
    if sys_id == SYS_PLEAT:
        return (z1.conjugate() * z3 * z4.conjugate()).real
    if sys_id == SYS_CURLED or sys_id == SYS_CURLED_FLAP:
        return (z1.conjugate() * z1.conjugate() * z3 * z4.conjugate()).real
    return (z1 * z2 * z3.conjugate() * z4).real


@njit(cache=True)
def section_amplitude(sys_id, y):
    """Modulus of the section monomial. A zero crossing of the section
    function with a collapsed amplitude is an axis graze, not a return."""
    if sys_id == SYS_JC:
        i2 = y[0] * y[0] + y[1] * y[1]
        r2 = y[2] * y[2] + y[3] * y[3]
        return np.sqrt(i2 * r2)
    z1 = complex(y[0], y[4])
    z2 = complex(y[1], y[5])
    z3 = complex(y[2], y[6])
    z4 = complex(y[3], y[7])
    if sys_id == SYS_FLAP2EE or sys_id == SYS_FAMILY_ABC:
        return abs(z1) * abs(z2) * abs(z3) * abs(z4)
    if sys_id == SYS_PLEAT:
        return abs(z1) * abs(z3) * abs(z4)
    return abs(z1) * abs(z1) * abs(z3) * abs(z4)


# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 0.2, 0.3, 0.8, 8.0 / 9.0
_A = (
    (0.2, 0.0, 0.0, 0.0, 0.0, 0.0),
    (3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0),
    (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0),
)
_E = (
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
)


@njit(cache=True)
def _dp_step(sys_id, params, y, dt, k1, out, err):
    n = y.size
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    tmp = np.empty(n)
    for i in range(n):
        tmp[i] = y[i] + dt * _A[0][0] * k1[i]
    rhs(sys_id, params, tmp, k2)
    for i in range(n):
        tmp[i] = y[i] + dt * (_A[1][0] * k1[i] + _A[1][1] * k2[i])
    rhs(sys_id, params, tmp, k3)
    for i in range(n):
        tmp[i] = y[i] + dt * (_A[2][0] * k1[i] + _A[2][1] * k2[i] + _A[2][2] * k3[i])
    rhs(sys_id, params, tmp, k4)
    for i in range(n):
        tmp[i] = y[i] + dt * (_A[3][0] * k1[i] + _A[3][1] * k2[i] + _A[3][2] * k3[i] + _A[3][3] * k4[i])
    rhs(sys_id, params, tmp, k5)
    for i in range(n):
        tmp[i] = y[i] + dt * (_A[4][0] * k1[i] + _A[4][1] * k2[i] + _A[4][2] * k3[i] + _A[4][3] * k4[i] + _A[4][4] * k5[i])
    rhs(sys_id, params, tmp, k6)
    for i in range(n):
        out[i] = y[i] + dt * (_A[5][0] * k1[i] + _A[5][2] * k3[i] + _A[5][3] * k4[i] + _A[5][4] * k5[i] + _A[5][5] * k6[i])
    rhs(sys_id, params, out, k7)
    for i in range(n):
        err[i] = dt * (_E[0] * k1[i] + _E[2] * k3[i] + _E[3] * k4[i] + _E[4] * k5[i] + _E[5] * k6[i] + _E[6] * k7[i])


@njit(cache=True)
def integrate_to_event(sys_id, params, y0, rtol, atol, t_max, tau_min):
    """Integrate until the section function crosses zero upward.

    Returns (status, t_event, y_event): status 0 on success, 1 if no return
    before t_max, 2 on step-size underflow.
    """
    n = y0.size
    y = y0.copy()
    t = 0.0
    k1 = np.empty(n)
    rhs(sys_id, params, y, k1)
    dt = 1e-4
    y_new = np.empty(n)
    err = np.empty(n)
    ev_prev = event_value(sys_id, y)
    amp_floor = 0.01 * section_amplitude(sys_id, y)
    cos_start = section_cos(sys_id, y)
    while t < t_max:
        if dt < 1e-14 * max(1.0, t):
            return 2, t, y
        if t + dt > t_max:
            dt = t_max - t
        _dp_step(sys_id, params, y, dt, k1, y_new, err)
        # weighted RMS error
        acc = 0.0
        for i in range(n):
            sc = atol + rtol * max(abs(y[i]), abs(y_new[i]))
            acc += (err[i] / sc) ** 2
        enorm = np.sqrt(acc / n)
        if enorm <= 1.0:
            t_new = t + dt
            ev_new = event_value(sys_id, y_new)
            if t_new > tau_min and ev_prev < 0.0 and ev_new >= 0.0:
                # bisect inside [t, t_new] with single fixed steps from y
                lo = 0.0
                hi = dt
                tmp = np.empty(n)
                etmp = np.empty(n)
                for _ in range(80):
                    mid = 0.5 * (lo + hi)
                    _dp_step(sys_id, params, y, mid, k1, tmp, etmp)
                    if event_value(sys_id, tmp) >= 0.0:
                        hi = mid
                    else:
                        lo = mid
                    if hi - lo < 1e-12 * max(1.0, t + hi):
                        break
                _dp_step(sys_id, params, y, hi, k1, tmp, etmp)
                if (t + hi > tau_min
                        and section_amplitude(sys_id, tmp) >= amp_floor
                        and section_cos(sys_id, tmp) * cos_start > 0.0):
                    return 0, t + hi, tmp
            t = t_new
            for i in range(n):
                y[i] = y_new[i]
            ev_prev = ev_new
            rhs(sys_id, params, y, k1)
            fac = 0.9 * enorm ** -0.2 if enorm > 0.0 else 5.0
            dt *= min(5.0, max(0.2, fac))
        else:
            dt *= max(0.2, 0.9 * enorm ** -0.2)
    return 1, t, y


@njit(cache=True)
def hamiltonian_value(sys_id, params, y):
    """H in the Cartesian chart (conservation checks)."""
    if sys_id == SYS_JC:
        g = params[0]
        return (y[2] * y[0] + y[3] * y[1]) / 2.0 + g * y[4] * y[4]
    z1 = complex(y[0], y[4])
    z2 = complex(y[1], y[5])
    z3 = complex(y[2], y[6])
    z4 = complex(y[3], y[7])
    i1 = 0.5 * (z1 * z1.conjugate()).real
    i2 = 0.5 * (z2 * z2.conjugate()).real
    i3 = 0.5 * (z3 * z3.conjugate()).real
    i4 = 0.5 * (z4 * z4.conjugate()).real
    if sys_id == SYS_FLAP2EE:
        t = params[0]
        x = (z1.conjugate() * z2.conjugate() * z3 * z4.conjugate()).real
        r = i3 - i4
        jj = i2 + i3
        return (1.0 - t) * r + (t / 3.0) * (0.45 * x + (2.0 * jj - 3.0) * (r + 2.0)) + 8.0 * t * i3 * i4
    if sys_id == SYS_PLEAT:
        t = params[0]
        x = (z1.conjugate() * z3 * z4.conjugate()).real
        return (1.0 - 2.0 * t) * i3 + t * x + 8.0 * t * i1 * i3
    if sys_id == SYS_CURLED or sys_id == SYS_CURLED_FLAP:
        x = (z1.conjugate() * z1.conjugate() * z3 * z4.conjugate()).real
        if sys_id == SYS_CURLED:
            return x
        return 0.75 * i3 + 0.25 * x
    a = params[0]
    b = params[1]
    c = params[2]
    x = (z1 * z2 * z3.conjugate() * z4).real
    return a * i3 + b * i3 * i3 + c * i3 ** 3 + x / np.sqrt(2.0)


@njit(cache=True)
def momentum_value(sys_id, y):
    if sys_id == SYS_JC:
        return (y[0] * y[0] + y[1] * y[1]) / 2.0 + y[4]
    i2 = 0.5 * (y[1] * y[1] + y[5] * y[5])
    i3 = 0.5 * (y[2] * y[2] + y[6] * y[6])
    if sys_id == SYS_FLAP2EE or sys_id == SYS_FAMILY_ABC:
        return i2 + i3
    return i2

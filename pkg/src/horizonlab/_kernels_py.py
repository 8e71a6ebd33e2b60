"""Pure-Python radial characteristic integrator.

Reference implementation of the Dormand-Prince 5(4) kernel used for the
radial families ``dr/dx0 = c(x0, r)``.  The compiled ``_kernels`` module
mirrors :func:`integrate_acoustic` step for step; :func:`integrate_speed`
accepts arbitrary Python callables and exists only here.

Near the origin the state is switched to ``w = r**2 / 2`` so that the
``b1/r`` singularity becomes the bounded right-hand side ``r * c``.
"""
import math

import numpy as np

WINDOW_END = 0
HIT_ORIGIN = 1
ESCAPED = 2
STEP_COLLAPSE = 3
MAX_STEPS = 4

PROFILE_CONSTANT = 0
PROFILE_TANH = 1
PROFILE_RATIONAL = 2

# Dormand-Prince 5(4) tableau
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                           49.0 / 176.0, -5103.0 / 18656.0)
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
E1, E3, E4, E5, E6, E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                          -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)


def profile_value(kind, p, x):
    if kind == PROFILE_CONSTANT:
        return p[0]
    u = (x - p[2]) / p[3]
    if kind == PROFILE_TANH:
        return p[0] + p[1] * math.tanh(u)
    return p[0] + p[1] / (1.0 + u * u)


def _hermite(theta, h, y0, y1, f0, f1):
    t2 = theta * theta
    t3 = t2 * theta
    return ((2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + theta) * h * f0
            + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * f1)


def _locate(h, y0, y1, f0, f1, target):
    """Fraction of the step where the cubic interpolant crosses ``target``."""
    lo, hi = 0.0, 1.0
    g_lo = y0 - target
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        g_mid = _hermite(mid, h, y0, y1, f0, f1) - target
        if (g_mid > 0.0) == (g_lo > 0.0):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def integrate_speed(speed, wspeed, r0, x_start, x_end, r_floor, r_escape,
                    escape_slope, rtol, atol, r_switch, max_steps, record):
    """Integrate ``dr/dx0 = speed(x0, r)`` from ``(x_start, r0)`` toward ``x_end``.

    ``wspeed(x0, r)`` must return ``r * speed(x0, r)`` and stay finite as
    ``r -> 0``.  Returns ``(status, x, r, xs, rs, nsteps)``.
    """
    direction = 1.0 if x_end >= x_start else -1.0
    r_switch = max(r_switch, 2.0 * r_floor)
    w_floor = 0.5 * r_floor * r_floor

    def rhs(mode, x, y):
        if mode == 0:
            return speed(x, y)
        return wspeed(x, math.sqrt(max(2.0 * y, 0.0)))

    x = x_start
    r = r0
    mode = 1 if r < r_switch else 0
    y = r if mode == 0 else 0.5 * r * r
    xs = [x]
    rs = [r]
    f = rhs(mode, x, y)
    span = abs(x_end - x_start)
    if span == 0.0:
        return WINDOW_END, x, r, np.array(xs), np.array(rs), 0
    h = min(span, 0.01 * max(r, 1.0) / max(abs(f), 1e-3))
    nsteps = 0
    status = MAX_STEPS
    while nsteps < max_steps:
        remaining = abs(x_end - x)
        if remaining <= 1e-15 * max(1.0, abs(x_end)):
            status = WINDOW_END
            break
        if h > remaining:
            h = remaining
        if h < 1e-13 * max(1.0, abs(x)):
            status = STEP_COLLAPSE
            break
        if mode == 1 and direction * f < 0.0:
            # w moves almost linearly near the origin: aim the crossing step
            # at w_floor / 2 so it never overshoots into the sqrt singularity
            h_aim = (y - 0.5 * w_floor) / (-direction * f)
            if h > h_aim:
                h = h_aim
        hs = direction * h
        k1 = f
        k2 = rhs(mode, x + C2 * hs, y + hs * A21 * k1)
        k3 = rhs(mode, x + C3 * hs, y + hs * (A31 * k1 + A32 * k2))
        k4 = rhs(mode, x + C4 * hs, y + hs * (A41 * k1 + A42 * k2 + A43 * k3))
        k5 = rhs(mode, x + C5 * hs, y + hs * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
        k6 = rhs(mode, x + hs, y + hs * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
        y_new = y + hs * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
        bad = not math.isfinite(y_new) or (mode == 0 and y_new <= 0.0)
        if not bad:
            k7 = rhs(mode, x + hs, y_new)
            bad = not math.isfinite(k7)
        if bad:
            h *= 0.25
            nsteps += 1
            continue
        err_abs = abs(hs * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7))
        if mode == 0:
            scale = atol + rtol * max(abs(y), abs(y_new))
        else:
            scale = atol * max(r, r_floor) + rtol * max(abs(y), abs(y_new))
        err = err_abs / scale
        nsteps += 1
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            continue
        # accepted step
        floor_target = r_floor if mode == 0 else w_floor
        if y_new <= floor_target:
            theta = _locate(hs, y, y_new, k1, k7, floor_target)
            x = x + theta * hs
            r = r_floor
            if record:
                xs.append(x)
                rs.append(r)
            status = HIT_ORIGIN
            break
        x = x + hs
        y = y_new
        f = k7
        r = y if mode == 0 else math.sqrt(2.0 * y)
        if record:
            xs.append(x)
            rs.append(r)
        if mode == 0 and r >= r_escape and direction * f >= escape_slope:
            status = ESCAPED
            break
        if mode == 0 and r < r_switch:
            mode = 1
            y = 0.5 * r * r
            f = rhs(mode, x, y)
        elif mode == 1 and r > 4.0 * r_switch:
            mode = 0
            y = r
            f = rhs(mode, x, y)
        fac = 5.0 if err == 0.0 else min(5.0, 0.9 * err ** -0.2)
        h *= fac
    if not record:
        xs.append(x)
        rs.append(r)
    return status, x, r, np.array(xs), np.array(rs), nsteps


def integrate_acoustic(kind, params, sign, r0, x_start, x_end, r_floor, r_escape,
                       escape_slope, rtol, atol, r_switch, max_steps, record):
    """Specialisation for ``dr/dx0 = A(x0)/r + sign`` with a parametric ``A``."""
    p = tuple(float(v) for v in params)

    def speed(x, r):
        return profile_value(kind, p, x) / r + sign

    def wspeed(x, r):
        return profile_value(kind, p, x) + sign * r

    return integrate_speed(speed, wspeed, r0, x_start, x_end, r_floor, r_escape,
                           escape_slope, rtol, atol, r_switch, max_steps, record)

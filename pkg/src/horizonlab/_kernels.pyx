# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Dormand-Prince kernel for the acoustic radial families.

Step-for-step mirror of ``_kernels_py.integrate_acoustic``; the loop runs
without the GIL so census and bisection probes can use threads.
"""
from libc.math cimport sqrt, tanh, fabs, isfinite, pow
from libc.stdlib cimport malloc, realloc, free

import numpy as np

cdef enum:
    WINDOW_END = 0
    HIT_ORIGIN = 1
    ESCAPED = 2
    STEP_COLLAPSE = 3
    MAX_STEPS = 4

cdef double C2 = 1.0 / 5.0, C3 = 3.0 / 10.0, C4 = 4.0 / 5.0, C5 = 8.0 / 9.0
cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0
cdef double A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0
cdef double A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0
cdef double B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0


cdef struct Profile:
    int kind
    double p0, p1, p2, p3
    double sign


cdef inline double profile_value(Profile* P, double x) noexcept nogil:
    cdef double u
    if P.kind == 0:
        return P.p0
    u = (x - P.p2) / P.p3
    if P.kind == 1:
        return P.p0 + P.p1 * tanh(u)
    return P.p0 + P.p1 / (1.0 + u * u)


cdef inline double rhs(Profile* P, int mode, double x, double y) noexcept nogil:
    cdef double r
    if mode == 0:
        return profile_value(P, x) / y + P.sign
    r = 2.0 * y
    if r < 0.0:
        r = 0.0
    return profile_value(P, x) + P.sign * sqrt(r)


cdef inline double hermite(double theta, double h, double y0, double y1,
                           double f0, double f1) noexcept nogil:
    cdef double t2 = theta * theta
    cdef double t3 = t2 * theta
    return ((2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + theta) * h * f0
            + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * f1)


cdef double locate(double h, double y0, double y1, double f0, double f1,
                   double target) noexcept nogil:
    cdef double lo = 0.0, hi = 1.0, mid, g_mid
    cdef double g_lo = y0 - target
    cdef int i
    for i in range(80):
        mid = 0.5 * (lo + hi)
        g_mid = hermite(mid, h, y0, y1, f0, f1) - target
        if (g_mid > 0.0) == (g_lo > 0.0):
            lo = mid
            g_lo = g_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


cdef struct Buffer:
    double* xs
    double* rs
    Py_ssize_t n
    Py_ssize_t cap


cdef int push(Buffer* b, double x, double r) noexcept nogil:
    cdef double* nx
    cdef double* nr
    if b.n == b.cap:
        b.cap = 2 * b.cap
        nx = <double*> realloc(b.xs, b.cap * sizeof(double))
        nr = <double*> realloc(b.rs, b.cap * sizeof(double))
        if nx == NULL or nr == NULL:
            return -1
        b.xs = nx
        b.rs = nr
    b.xs[b.n] = x
    b.rs[b.n] = r
    b.n += 1
    return 0


cdef int run(Profile* P, double r0, double x_start, double x_end, double r_floor,
             double r_escape, double escape_slope, double rtol, double atol,
             double r_switch, long max_steps, bint record, Buffer* buf,
             double* x_out, double* r_out, long* steps_out) noexcept nogil:
    cdef double direction = 1.0 if x_end >= x_start else -1.0
    cdef double w_floor = 0.5 * r_floor * r_floor
    cdef double x = x_start, r = r0, y, f, h, hs, remaining, span
    cdef double k1, k2, k3, k4, k5, k6, k7, y_new, err_abs, scale, err, fac
    cdef double floor_target, theta, ay, ayn, h_aim
    cdef int mode, status = MAX_STEPS
    cdef bint bad
    cdef long nsteps = 0
    if r_switch < 2.0 * r_floor:
        r_switch = 2.0 * r_floor
    mode = 1 if r < r_switch else 0
    y = r if mode == 0 else 0.5 * r * r
    push(buf, x, r)
    f = rhs(P, mode, x, y)
    span = fabs(x_end - x_start)
    if span == 0.0:
        x_out[0] = x
        r_out[0] = r
        steps_out[0] = 0
        return WINDOW_END
    h = 0.01 * (r if r > 1.0 else 1.0) / (fabs(f) if fabs(f) > 1e-3 else 1e-3)
    if h > span:
        h = span
    while nsteps < max_steps:
        remaining = fabs(x_end - x)
        if remaining <= 1e-15 * (fabs(x_end) if fabs(x_end) > 1.0 else 1.0):
            status = WINDOW_END
            break
        if h > remaining:
            h = remaining
        if h < 1e-13 * (fabs(x) if fabs(x) > 1.0 else 1.0):
            status = STEP_COLLAPSE
            break
        if mode == 1 and direction * f < 0.0:
            h_aim = (y - 0.5 * w_floor) / (-direction * f)
            if h > h_aim:
                h = h_aim
        hs = direction * h
        k1 = f
        k2 = rhs(P, mode, x + C2 * hs, y + hs * A21 * k1)
        k3 = rhs(P, mode, x + C3 * hs, y + hs * (A31 * k1 + A32 * k2))
        k4 = rhs(P, mode, x + C4 * hs, y + hs * (A41 * k1 + A42 * k2 + A43 * k3))
        k5 = rhs(P, mode, x + C5 * hs, y + hs * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
        k6 = rhs(P, mode, x + hs, y + hs * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
        y_new = y + hs * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
        bad = (not isfinite(y_new)) or (mode == 0 and y_new <= 0.0)
        if not bad:
            k7 = rhs(P, mode, x + hs, y_new)
            bad = not isfinite(k7)
        if bad:
            h *= 0.25
            nsteps += 1
            continue
        err_abs = fabs(hs * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7))
        ay = fabs(y)
        ayn = fabs(y_new)
        if ayn > ay:
            ay = ayn
        if mode == 0:
            scale = atol + rtol * ay
        else:
            scale = atol * (r if r > r_floor else r_floor) + rtol * ay
        err = err_abs / scale
        nsteps += 1
        if err > 1.0:
            fac = 0.9 * pow(err, -0.2)
            h *= fac if fac > 0.2 else 0.2
            continue
        floor_target = r_floor if mode == 0 else w_floor
        if y_new <= floor_target:
            theta = locate(hs, y, y_new, k1, k7, floor_target)
            x = x + theta * hs
            r = r_floor
            if record:
                push(buf, x, r)
            status = HIT_ORIGIN
            break
        x = x + hs
        y = y_new
        f = k7
        r = y if mode == 0 else sqrt(2.0 * y)
        if record:
            push(buf, x, r)
        if mode == 0 and r >= r_escape and direction * f >= escape_slope:
            status = ESCAPED
            break
        if mode == 0 and r < r_switch:
            mode = 1
            y = 0.5 * r * r
            f = rhs(P, mode, x, y)
        elif mode == 1 and r > 4.0 * r_switch:
            mode = 0
            y = r
            f = rhs(P, mode, x, y)
        if err == 0.0:
            fac = 5.0
        else:
            fac = 0.9 * pow(err, -0.2)
            if fac > 5.0:
                fac = 5.0
        h *= fac
    if not record:
        push(buf, x, r)
    x_out[0] = x
    r_out[0] = r
    steps_out[0] = nsteps
    return status


def integrate_acoustic(int kind, params, double sign, double r0, double x_start,
                       double x_end, double r_floor, double r_escape,
                       double escape_slope, double rtol, double atol,
                       double r_switch, long max_steps, bint record):
    """See ``_kernels_py.integrate_acoustic``; identical contract."""
    cdef Profile P
    cdef Buffer buf
    cdef double x_end_out = 0.0, r_end_out = 0.0
    cdef long nsteps = 0
    cdef int status
    cdef Py_ssize_t i
    cdef double[::1] xv
    cdef double[::1] rv
    P.kind = kind
    P.p0 = params[0]
    P.p1 = params[1]
    P.p2 = params[2]
    P.p3 = params[3]
    P.sign = sign
    buf.cap = 256
    buf.n = 0
    buf.xs = <double*> malloc(buf.cap * sizeof(double))
    buf.rs = <double*> malloc(buf.cap * sizeof(double))
    if buf.xs == NULL or buf.rs == NULL:
        free(buf.xs)
        free(buf.rs)
        raise MemoryError()
    try:
        with nogil:
            status = run(&P, r0, x_start, x_end, r_floor, r_escape, escape_slope,
                         rtol, atol, r_switch, max_steps, record, &buf,
                         &x_end_out, &r_end_out, &nsteps)
        xs = np.empty(buf.n)
        rs = np.empty(buf.n)
        xv = xs
        rv = rs
        for i in range(buf.n):
            xv[i] = buf.xs[i]
            rv[i] = buf.rs[i]
    finally:
        free(buf.xs)
        free(buf.rs)
    return status, x_end_out, r_end_out, xs, rs, nsteps

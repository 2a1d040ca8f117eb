"""Compiled inner loop: coupled ODE right-hand side and an adaptive
Dormand-Prince 5(4) integrator with crossing localization at the stopper
and capacitance-clamp displacements.

Everything here works on packed float64 arrays so numba can cache the
compiled code; the friendly wrappers live in dynamics.py.
"""

import numpy as np
from numba import njit

# indices into the packed parameter vector
P_MASS = 0
P_SPRING = 1
P_DAMPING = 2
P_VE = 3
P_CE = 4
P_CP = 5
P_R1 = 6
P_R2 = 7
P_XS = 8
P_KS = 9
P_XC = 10
P_X0 = 11
P_CAP_SLOPE = 12
P_CMAX = 13
P_CMIN = 14
P_VARIANT = 15  # 0 nonlinear, 1 linear
P_C0 = 16
P_ALPHA1 = 17
P_KQ = 18
NPARAMS = 19

EX_NONE = 0
EX_SINE = 1
EX_SAMPLED = 2

STATUS_OK = 0
STATUS_NONFINITE = 1
STATUS_UNDERFLOW = 2


@njit(cache=True)
def accel_at(t, ex_kind, ex_par, samples):
    if ex_kind == EX_SINE:
        return ex_par[0] * np.sin(2.0 * np.pi * ex_par[1] * t + ex_par[2])
    if ex_kind == EX_SAMPLED:
        u = (t - ex_par[0]) / ex_par[1]
        n = samples.shape[0]
        i = int(np.floor(u))
        if i < 0:
            i = 0
        if i > n - 2:
            i = n - 2
        frac = u - i
        if frac < 0.0:
            frac = 0.0
        if frac > 1.0:
            frac = 1.0
        return samples[i] * (1.0 - frac) + samples[i + 1] * frac
    return 0.0


@njit(cache=True)
def rhs(t, y, p, ex_kind, ex_par, samples, out):
    x = y[0]
    v = y[1]
    q1 = y[2]
    q2 = y[3]
    a = accel_at(t, ex_kind, ex_par, samples)

    ce = p[P_CE]
    cp = p[P_CP]

    if p[P_VARIANT] == 0.0:
        # nonlinear: y carries absolute charges
        s = p[P_CAP_SLOPE]
        x0 = p[P_X0]
        xc = p[P_XC]
        if x > xc:
            c1 = p[P_CMIN]
            c2 = p[P_CMAX]
            u1 = 0.0
            u2 = 0.0
        elif x < -xc:
            c1 = p[P_CMAX]
            c2 = p[P_CMIN]
            u1 = 0.0
            u2 = 0.0
        else:
            c1 = s * (x0 - x)
            c2 = s * (x0 + x)
            u1 = 1.0 / (s * (x0 - x) * (x0 - x))
            u2 = -1.0 / (s * (x0 + x) * (x0 + x))
        common = p[P_VE] + (q1 + q2) / ce
        vn1 = common + q1 / c1
        vn2 = common + q2 / c2
        ft = p[P_SPRING] * x + 0.5 * q1 * q1 * u1 + 0.5 * q2 * q2 * u2
        xs = p[P_XS]
        if x > xs:
            fs = -p[P_KS] * (x - xs)
        elif x < -xs:
            fs = -p[P_KS] * (x + xs)
        else:
            fs = 0.0
        g1 = cp * q1 * u1 * v
        g2 = cp * q2 * u2 * v
    else:
        # linear: y carries charge offsets from the operating point
        alpha = p[P_ALPHA1]
        c0 = p[P_C0]
        c1 = c0
        c2 = c0
        vn1 = alpha * x + (q1 + q2) / ce + q1 / c0
        vn2 = -alpha * x + (q1 + q2) / ce + q2 / c0
        ft = (p[P_SPRING] + p[P_KQ]) * x + alpha * q1 - alpha * q2
        fs = 0.0
        g1 = cp * alpha * v
        g2 = -cp * alpha * v

    a11 = 1.0 + cp * (1.0 / ce + 1.0 / c1)
    a22 = 1.0 + cp * (1.0 / ce + 1.0 / c2)
    a12 = cp / ce
    b1 = -(vn1 / p[P_R1] + g1)
    b2 = -(vn2 / p[P_R2] + g2)
    det = a11 * a22 - a12 * a12
    out[0] = v
    out[1] = (-ft + fs - p[P_DAMPING] * v) / p[P_MASS] + a
    out[2] = (a22 * b1 - a12 * b2) / det
    out[3] = (a11 * b2 - a12 * b1) / det


@njit(cache=True)
def _hermite_x(theta, h, x0, v0, x1, v1):
    t2 = theta * theta
    t3 = t2 * theta
    return ((2.0 * t3 - 3.0 * t2 + 1.0) * x0 + (t3 - 2.0 * t2 + theta) * h * v0
            + (-2.0 * t3 + 3.0 * t2) * x1 + (t3 - t2) * h * v1)


@njit(cache=True)
def integrate_core(y0, t0, t1, p, ex_kind, ex_par, samples,
                   rtol, atol, max_step, event_tol,
                   ts, ys):
    """March the 4-state system from t0 to t1.

    Fills ys (len(ts) x 4) with cubic-Hermite samples at the uniform
    times ts. Returns (status, t_reached, accepted, rejected).
    """
    # Dormand-Prince 5(4) tableau
    c2, c3, c4, c5 = 0.2, 0.3, 0.8, 8.0 / 9.0
    a21 = 0.2
    a31, a32 = 3.0 / 40.0, 9.0 / 40.0
    a41, a42, a43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
    a51, a52, a53, a54 = (19372.0 / 6561.0, -25360.0 / 2187.0,
                          64448.0 / 6561.0, -212.0 / 729.0)
    a61, a62, a63, a64, a65 = (9017.0 / 3168.0, -355.0 / 33.0,
                               46732.0 / 5247.0, 49.0 / 176.0,
                               -5103.0 / 18656.0)
    b1, b3, b4, b5, b6 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                          -2187.0 / 6784.0, 11.0 / 84.0)
    e1, e3, e4, e5, e6, e7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                              -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)

    nboundaries = 4
    bounds = np.empty(nboundaries)
    has_events = p[P_VARIANT] == 0.0
    bounds[0] = p[P_XS]
    bounds[1] = -p[P_XS]
    bounds[2] = p[P_XC]
    bounds[3] = -p[P_XC]

    y = y0.copy()
    k1 = np.empty(4)
    k2 = np.empty(4)
    k3 = np.empty(4)
    k4 = np.empty(4)
    k5 = np.empty(4)
    k6 = np.empty(4)
    k7 = np.empty(4)
    ytmp = np.empty(4)
    ynew = np.empty(4)

    t = t0
    span = t1 - t0
    h = min(max_step, span / 100.0, 1e-5)
    hmin_floor = 1e-14 * max(abs(t0), abs(t1), 1.0)

    nsamp = ts.shape[0]
    isamp = 0
    # emit samples that coincide with t0
    while isamp < nsamp and ts[isamp] <= t + hmin_floor:
        for j in range(4):
            ys[isamp, j] = y[j]
        isamp += 1

    accepted = 0
    rejected = 0
    tiny = 1e-12 * max(span, 1.0)

    while t < t1 - tiny:
        if h > max_step:
            h = max_step
        if t + h > t1:
            h = t1 - t
        if h < hmin_floor:
            return STATUS_UNDERFLOW, t, accepted, rejected

        rhs(t, y, p, ex_kind, ex_par, samples, k1)
        for j in range(4):
            ytmp[j] = y[j] + h * a21 * k1[j]
        rhs(t + c2 * h, ytmp, p, ex_kind, ex_par, samples, k2)
        for j in range(4):
            ytmp[j] = y[j] + h * (a31 * k1[j] + a32 * k2[j])
        rhs(t + c3 * h, ytmp, p, ex_kind, ex_par, samples, k3)
        for j in range(4):
            ytmp[j] = y[j] + h * (a41 * k1[j] + a42 * k2[j] + a43 * k3[j])
        rhs(t + c4 * h, ytmp, p, ex_kind, ex_par, samples, k4)
        for j in range(4):
            ytmp[j] = y[j] + h * (a51 * k1[j] + a52 * k2[j] + a53 * k3[j]
                                  + a54 * k4[j])
        rhs(t + c5 * h, ytmp, p, ex_kind, ex_par, samples, k5)
        for j in range(4):
            ytmp[j] = y[j] + h * (a61 * k1[j] + a62 * k2[j] + a63 * k3[j]
                                  + a64 * k4[j] + a65 * k5[j])
        rhs(t + h, ytmp, p, ex_kind, ex_par, samples, k6)
        for j in range(4):
            ynew[j] = y[j] + h * (b1 * k1[j] + b3 * k3[j] + b4 * k4[j]
                                  + b5 * k5[j] + b6 * k6[j])
        rhs(t + h, ynew, p, ex_kind, ex_par, samples, k7)

        finite = True
        for j in range(4):
            if not np.isfinite(ynew[j]):
                finite = False
        if not finite:
            rejected += 1
            h *= 0.25
            if h < hmin_floor:
                return STATUS_NONFINITE, t, accepted, rejected
            continue

        errsq = 0.0
        for j in range(4):
            ej = h * (e1 * k1[j] + e3 * k3[j] + e4 * k4[j] + e5 * k5[j]
                      + e6 * k6[j] + e7 * k7[j])
            ymax = abs(y[j])
            if abs(ynew[j]) > ymax:
                ymax = abs(ynew[j])
            sc = atol[j] + rtol * ymax
            errsq += (ej / sc) * (ej / sc)
        errnorm = np.sqrt(errsq / 4.0)

        if errnorm > 1.0:
            rejected += 1
            fac = 0.9 * errnorm ** (-0.2)
            if fac < 0.2:
                fac = 0.2
            h *= fac
            continue

        # localize the earliest stopper/clamp crossing inside the step
        if has_events:
            theta_hit = 2.0
            for ib in range(nboundaries):
                bb = bounds[ib]
                f0 = y[0] - bb
                f1 = ynew[0] - bb
                if abs(f0) <= event_tol * 1e-6 or abs(f1) <= event_tol:
                    continue  # already landing on/within tolerance of the boundary
                if f0 * f1 < 0.0:
                    lo = 0.0
                    hi = 1.0
                    flo = f0
                    for _ in range(80):
                        mid = 0.5 * (lo + hi)
                        fm = _hermite_x(mid, h, y[0], k1[0], ynew[0], k7[0]) - bb
                        if abs(fm) < event_tol or (hi - lo) * h < hmin_floor:
                            lo = mid
                            hi = mid
                            break
                        if flo * fm <= 0.0:
                            hi = mid
                        else:
                            lo = mid
                            flo = fm
                    th = 0.5 * (lo + hi)
                    if th < theta_hit:
                        theta_hit = th
            if theta_hit < 1.0 and theta_hit > 1e-4:
                # cut the step at the crossing and retake it
                h *= theta_hit
                continue

        # emit uniform samples covered by this step
        while isamp < nsamp and ts[isamp] <= t + h + tiny:
            theta = (ts[isamp] - t) / h
            if theta < 0.0:
                theta = 0.0
            if theta > 1.0:
                theta = 1.0
            for j in range(4):
                ys[isamp, j] = _hermite_x(theta, h, y[j], k1[j], ynew[j], k7[j])
            isamp += 1

        t += h
        for j in range(4):
            y[j] = ynew[j]
        accepted += 1

        fac = 0.9 * errnorm ** (-0.2) if errnorm > 0.0 else 5.0
        if fac > 5.0:
            fac = 5.0
        if fac < 0.2:
            fac = 0.2
        h *= fac

    # flush any trailing samples at t1 (rounding guard)
    while isamp < nsamp:
        for j in range(4):
            ys[isamp, j] = y[j]
        isamp += 1

    return STATUS_OK, t, accepted, rejected

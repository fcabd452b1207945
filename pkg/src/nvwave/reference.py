"""Finite-difference reference for smooth data, used as an independent oracle.

Leapfrog in time with centred differences in space for

    u_tt = c(u) (c(u) u_x)_x - c'(u) (rho^2 + sigma^2) / 4
    rho_t = (c(u) rho)_x,   sigma_t = -(c(u) sigma)_x

on a uniform grid with the end values held fixed.  Second order in h and dt;
only meaningful before gradients blow up.
"""

import numpy as np


def _accel(u, rho, sigma, model, h):
    a = np.zeros_like(u)
    c = model.c(u)
    cm = model.c(0.5 * (u[1:] + u[:-1]))
    flux = cm * np.diff(u)
    a[1:-1] = c[1:-1] * (flux[1:] - flux[:-1]) / (h * h)
    a[1:-1] -= 0.25 * model.dc(u[1:-1]) * (rho[1:-1] ** 2 + sigma[1:-1] ** 2)
    return a


def _transport(u, f, model, h, sign):
    out = np.zeros_like(f)
    g = model.c(u) * f
    out[1:-1] = sign * (g[2:] - g[:-2]) / (2 * h)
    return out


def leapfrog(grid, u0, ut0, rho0, sigma0, model, T, cfl=0.4):
    """(u, u_t, rho, sigma) at time T from data on a uniform grid.

    dt = cfl * h / kappa, shortened so that a whole number of steps reaches T.
    The first step is a second-order Taylor step for u and Heun's method for
    rho and sigma.
    """
    x = np.asarray(grid, dtype=float)
    h = float(x[1] - x[0])
    if np.any(np.abs(np.diff(x) - h) > 1e-9 * abs(h)):
        raise ValueError("leapfrog needs a uniform grid")
    u, ut, rho, sig = (np.array(np.broadcast_to(np.asarray(f, dtype=float), x.shape))
                       for f in (u0, ut0, rho0, sigma0))
    T = float(T)
    if T == 0:
        return u, ut, rho, sig
    n = max(1, int(np.ceil(abs(T) / (cfl * h / model.kappa))))
    dt = T / n

    u1 = u + dt * ut + 0.5 * dt * dt * _accel(u, rho, sig, model, h)
    r_half = rho + dt * _transport(u, rho, model, h, 1)
    s_half = sig + dt * _transport(u, sig, model, h, -1)
    r1 = rho + 0.5 * dt * (_transport(u, rho, model, h, 1) + _transport(u1, r_half, model, h, 1))
    s1 = sig + 0.5 * dt * (_transport(u, sig, model, h, -1) + _transport(u1, s_half, model, h, -1))
    for f1, f0 in ((u1, u), (r1, rho), (s1, sig)):
        f1[0], f1[-1] = f0[0], f0[-1]

    u_prev, u_cur, r_prev, r_cur, s_prev, s_cur = u, u1, rho, r1, sig, s1
    for _ in range(n - 1):
        u_next = 2 * u_cur - u_prev + dt * dt * _accel(u_cur, r_cur, s_cur, model, h)
        r_next = r_prev + 2 * dt * _transport(u_cur, r_cur, model, h, 1)
        s_next = s_prev + 2 * dt * _transport(u_cur, s_cur, model, h, -1)
        for f1, f0 in ((u_next, u_cur), (r_next, r_cur), (s_next, s_cur)):
            f1[0], f1[-1] = f0[0], f0[-1]
        u_prev, u_cur = u_cur, u_next
        r_prev, r_cur = r_cur, r_next
        s_prev, s_cur = s_cur, s_next
    ut_end = (u_cur - u_prev) / dt
    return u_cur, ut_end, r_cur, s_cur


def richardson_reference(make_data, model, T, n, cfl=0.4):
    """u at time T on an n-cell grid, extrapolated from n and 2n cells.

    ``make_data(n)`` returns (grid, u0, ut0, rho0, sigma0) on n cells.
    """
    g1, *d1 = make_data(n)
    g2, *d2 = make_data(2 * n)
    u1 = leapfrog(g1, *d1, model, T, cfl)[0]
    u2 = leapfrog(g2, *d2, model, T, cfl)[0]
    return g1, (4.0 * u2[::2] - u1) / 3.0

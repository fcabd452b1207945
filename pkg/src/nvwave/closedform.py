"""Closed-form label maps and initial curves for three model data sets, used
to check the numerical data maps.

* ``diagonal``: mu, nu absolutely continuous with the same cumulative
  atan(x) + pi/2; x1 = x2 = f^{-1} with f(x) = atan(x) + x + pi/2, curve X = Y = s.
* ``example2``: mu a unit atom at 0, nu as above.
* ``box``: unit atoms of both measures at 0; the curve runs up the left side
  of the unit box and then across its top.
"""

import numpy as np
from scipy.optimize import brentq

XTOL = 1e-13


def f_arctan(x):
    return np.arctan(x) + x + 0.5 * np.pi


def f_arctan_inverse(Y):
    Y = np.atleast_1d(np.asarray(Y, dtype=float))
    out = np.empty_like(Y)
    for k, y in enumerate(Y):
        # f(x) - x lies in (0, pi), so the root is in [y - pi, y]
        out[k] = brentq(lambda x: f_arctan(x) - y, y - np.pi - 1.0, y + 1.0, xtol=XTOL, rtol=1e-15)
    return out


def x_unit_atom(X):
    """Label map of a unit atom at 0 and no other mass."""
    X = np.asarray(X, dtype=float)
    return np.where(X <= 0, X, np.where(X <= 1, 0.0, X - 1.0))


def curve_diagonal(s):
    s = np.asarray(s, dtype=float)
    return s.copy(), s.copy()


def curve_example2(s):
    s = np.atleast_1d(np.asarray(s, dtype=float))
    X = np.empty_like(s)
    a, b = 0.25 * np.pi, 0.25 * np.pi + 0.5
    for k, sk in enumerate(s):
        if sk <= a:
            X[k] = brentq(lambda z: np.arctan(z) + 2 * z + 0.5 * np.pi - 2 * sk,
                          sk - 10.0, sk + 10.0, xtol=XTOL, rtol=1e-15)
        elif sk <= b:
            X[k] = 2 * sk - 0.5 * np.pi
        else:
            X[k] = brentq(lambda z: np.arctan(z - 1) + 2 * z - 1 + 0.5 * np.pi - 2 * sk,
                          sk - 10.0, sk + 10.0, xtol=XTOL, rtol=1e-15)
    return X, 2 * s - X


def curve_box(s):
    s = np.asarray(s, dtype=float)
    X = np.where(s <= 0, s, np.where(s <= 0.5, 0.0, np.where(s <= 1, 2 * s - 1, s)))
    Y = np.where(s <= 0, s, np.where(s <= 0.5, 2 * s, np.where(s <= 1, 1.0, s)))
    return X, Y


CURVES = {"diagonal": curve_diagonal, "example2": curve_example2, "box": curve_box}


def curve_error(curve, psi, shape):
    """max |X - X_exact(s)| + |Y - Y_exact(s)| over curve points that sit on
    sample labels of the absolutely continuous family (where no interpolation
    enters); all points for the diagonal and box shapes."""
    X, Y = curve.X, curve.Y
    mask = np.ones(X.size, dtype=bool)
    if shape == "example2":
        mask = np.isin(Y, psi.second.grid)
    s = 0.5 * (X + Y)[mask]
    Xe, Ye = CURVES[shape](s)
    err = np.abs(X[mask] - Xe) + np.abs(Y[mask] - Ye)
    k = int(np.argmax(err)) if err.size else 0
    return (float(err[k]) if err.size else 0.0), (float(s[k]) if err.size else None)

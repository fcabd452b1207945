"""Forward data maps: Eulerian data -> Lagrangian pair psi -> initial curve.

A ``LagrangianHalf`` stores one of the two six-tuples (x, U, J, K, V, H) on its
label grid together with the derivative samples x', J', K'.  Outside its
samples a half continues trivially: x' = 1 and everything else frozen.

The initial curve is built as a lattice path: every sample label of either
half yields one curve point, so the curve runs through nodes of the tensor
grid (X-labels) x (Y-labels) and the characteristic solver never has to
interpolate the data it starts from.
"""

from dataclasses import dataclass, replace

import numpy as np

from .measures import MonotoneMap, flat_tolerance, generalized_inverse
from .report import Report


class InvariantError(ValueError):
    pass


_FIELDS = ("x", "U", "J", "K", "V", "H", "dx", "dJ", "dK")


@dataclass(frozen=True)
class LagrangianHalf:
    grid: np.ndarray
    x: np.ndarray
    U: np.ndarray
    J: np.ndarray
    K: np.ndarray
    V: np.ndarray
    H: np.ndarray
    dx: np.ndarray
    dJ: np.ndarray
    dK: np.ndarray
    sign: int = 1  # +1 for the first family, -1 for the second

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        object.__setattr__(self, "grid", g)
        for name in _FIELDS:
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != g.shape:
                raise ValueError(f"{name} has shape {arr.shape}, grid has {g.shape}")
            object.__setattr__(self, name, arr)
        if g.size > 1 and np.any(np.diff(g) <= 0):
            raise ValueError("label grid must be strictly increasing")

    @property
    def size(self):
        return self.grid.size

    def position_map(self):
        return MonotoneMap(self.grid, self.x, 1.0, 1.0)

    def at(self, X):
        """All fields at labels ``X`` (linear interpolation, trivial outside)."""
        X = np.asarray(X, dtype=float)
        g = self.grid
        out = {}
        for name in ("U", "J", "K"):
            out[name] = np.interp(X, g, getattr(self, name))
        out["x"] = self.position_map()(X)
        for name in ("V", "H", "dJ", "dK"):
            out[name] = np.interp(X, g, getattr(self, name), left=0.0, right=0.0)
        out["dx"] = np.interp(X, g, self.dx, left=1.0, right=1.0)
        return out

    def take(self, idx):
        return replace(self, grid=self.grid[idx], **{n: getattr(self, n)[idx] for n in _FIELDS})


@dataclass(frozen=True)
class PsiPair:
    first: LagrangianHalf
    second: LagrangianHalf

    def halves(self):
        return (self.first, self.second)


# ---------------------------------------------------------------- map L

ATOM_EDGE = 1e-7


def _half_from_state(g, u, field, dens_field, cum, cum_closed, atoms, model, sign, n_atom):
    c = model.c(u)
    d = dens_field
    dx_ac = 1.0 / (1.0 + d)
    dJ_ac = d * dx_ac
    if sign > 0:
        V_ac = dx_ac * field[0] / (2.0 * c)
    else:
        V_ac = -dx_ac * field[0] / (2.0 * c)
    H_ac = 0.5 * field[1] * dx_ac

    atom_at = {}
    for a, m in atoms:
        atom_at[int(np.searchsorted(g, a))] = m

    cols = {n: [] for n in ("X", "x", "U", "V", "H", "dx", "dJ", "c")}

    def push(X, j, flat):
        cols["X"].append(X)
        cols["x"].append(g[j])
        cols["U"].append(u[j])
        cols["c"].append(c[j])
        if flat:
            cols["V"].append(0.0)
            cols["H"].append(0.0)
            cols["dx"].append(0.0)
            cols["dJ"].append(1.0)
        else:
            cols["V"].append(V_ac[j])
            cols["H"].append(H_ac[j])
            cols["dx"].append(dx_ac[j])
            cols["dJ"].append(dJ_ac[j])

    for j in range(g.size):
        X0 = g[j] + cum[j]
        push(X0, j, False)
        m = atom_at.get(j)
        if m:
            # flat nodes just inside both ends keep the jump of the derivatives
            # inside a cell of width ATOM_EDGE * m
            n = max(2, int(np.ceil(n_atom * m)))
            inner = np.concatenate([[ATOM_EDGE], np.arange(1, n) / n, [1.0 - ATOM_EDGE]])
            for k in inner:
                push(X0 + m * k, j, True)
            push(g[j] + cum_closed[j], j, False)

    X = np.asarray(cols["X"])
    x = np.asarray(cols["x"])
    J = X - x
    cc = np.asarray(cols["c"])
    dJ = np.asarray(cols["dJ"])
    inv_c = 1.0 / cc
    dK_ = np.concatenate([[0.0], np.diff(J) * 0.5 * (inv_c[1:] + inv_c[:-1])])
    K = sign * np.cumsum(dK_)
    return LagrangianHalf(X, x, np.asarray(cols["U"]), J, K, np.asarray(cols["V"]),
                          np.asarray(cols["H"]), np.asarray(cols["dx"]), dJ,
                          sign * dJ * inv_c, sign)


def map_L(state, model, n_atom=32):
    """Eulerian state -> PsiPair (already normalised so x_i + J_i = id)."""
    g = state.grid
    atom_pos = np.concatenate([state.mu.atom_positions, state.nu.atom_positions])
    missing = atom_pos[~np.isin(atom_pos, g)]
    u, R, S, rho, sigma = state.u, state.R, state.S, state.rho, state.sigma
    if missing.size:
        new = np.unique(np.concatenate([g, missing]))
        u, R, S, rho, sigma = (np.interp(new, g, f) for f in (u, R, S, rho, sigma))
        g = new
    c = model.c(u)
    dmu = 0.25 * (R * R + c * rho * rho)
    dnu = 0.25 * (S * S + c * sigma * sigma)
    first = _half_from_state(g, u, (R, rho), dmu, state.mu.cumulative(g),
                             state.mu.cumulative_closed(g), state.mu.atoms, model, 1, n_atom)
    second = _half_from_state(g, u, (S, sigma), dnu, state.nu.cumulative(g),
                              state.nu.cumulative_closed(g), state.nu.atoms, model, -1, n_atom)
    return PsiPair(first, second)


# ---------------------------------------------------------------- curve data

@dataclass
class CurveData:
    """Initial curve through the label plane plus the data carried along it.

    Path point k sits at node (iX[k], iY[k]) of ``Xgrid`` x ``Ygrid``; Z holds
    (t, x, U, J, K) at path points, V the X-derivatives on ``Xgrid`` and W the
    Y-derivatives on ``Ygrid``.
    """

    Xgrid: np.ndarray
    Ygrid: np.ndarray
    iX: np.ndarray
    iY: np.ndarray
    Z: np.ndarray
    V: np.ndarray
    W: np.ndarray
    p: np.ndarray
    q: np.ndarray

    @property
    def X(self):
        return self.Xgrid[self.iX]

    @property
    def Y(self):
        return self.Ygrid[self.iY]

    @property
    def s(self):
        return 0.5 * (self.X + self.Y)

    def column_anchor(self):
        """Path index of the lowest path point in every column."""
        out = np.full(self.Xgrid.size, -1)
        for k in range(self.iX.size - 1, -1, -1):
            out[self.iX[k]] = k
        return out

    def row_anchor(self):
        """Path index of the leftmost path point in every row."""
        out = np.full(self.Ygrid.size, -1)
        for k in range(self.iY.size - 1, -1, -1):
            out[self.iY[k]] = k
        return out

    def X_of_s(self, s):
        return np.interp(s, self.s, self.X)

    def Y_of_s(self, s):
        return np.interp(s, self.s, self.Y)


def _upper_inverse(m, v):
    # sup{Y : m(Y) <= v} for a piecewise-linear nondecreasing map
    xi, yo = m.inputs, m.outputs
    v = np.asarray(v, dtype=float)
    k = np.searchsorted(yo, v, side="right")
    out = np.empty_like(v)
    lo = k == 0
    out[lo] = xi[0] + (v[lo] - yo[0]) / m.left_slope
    hi = k == yo.size
    out[hi] = xi[-1] + (v[hi] - yo[-1]) / m.right_slope
    mid = ~lo & ~hi
    km = k[mid]
    y0, y1 = yo[km - 1], yo[km]
    x0, x1 = xi[km - 1], xi[km]
    theta = (v[mid] - y0) / (y1 - y0)
    res = x0 + theta * (x1 - x0)
    out[mid] = np.where(v[mid] == y0, x0, res)
    return out


def _merge_values(vals):
    """Sorted unique values with near-duplicates merged; returns (grid, index)."""
    order = np.argsort(vals, kind="stable")
    sv = vals[order]
    new = np.ones(sv.size, dtype=bool)
    new[1:] = (sv[1:] - sv[:-1]) > flat_tolerance(sv[1:])
    grp = np.cumsum(new) - 1
    grid = sv[new]
    idx = np.empty(vals.size, dtype=int)
    idx[order] = grp
    return grid, idx


def curve_points(psi):
    """(X, Y) of the canonical curve at every sample label of either half."""
    h1, h2 = psi.first, psi.second
    m1, m2 = h1.position_map(), h2.position_map()
    x1, x2 = h1.x, h2.x
    first_of_run = np.ones(x1.size, dtype=bool)
    first_of_run[1:] = x1[1:] > x1[:-1]
    Y_for_1 = np.where(first_of_run, generalized_inverse(m2, x1), _upper_inverse(m2, x1))
    X_for_2 = generalized_inverse(m1, x2)
    X = np.concatenate([h1.grid, X_for_2])
    Y = np.concatenate([Y_for_1, h2.grid])
    return X, Y


def map_C(psi, model):
    """PsiPair -> CurveData with t = 0 on the curve (box: up the left side, then across the top)."""
    h1, h2 = psi.first, psi.second
    X, Y = curve_points(psi)
    Xgrid, iX = _merge_values(X)
    Ygrid, iY = _merge_values(Y)
    pts = np.unique(np.column_stack([iX, iY]), axis=0)
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]
    iX, iY = pts[:, 0], pts[:, 1]
    dI, dJ = np.diff(iX), np.diff(iY)
    if np.any(dJ < 0) or np.any(dI > 1) or np.any(dJ > 1):
        bad = int(np.flatnonzero((dJ < 0) | (dI > 1) | (dJ > 1))[0])
        raise InvariantError(
            f"curve is not monotone near X={Xgrid[iX[bad]]:.6g}, Y={Ygrid[iY[bad]]:.6g}: "
            "x1 and x2 do not describe the same line (psi outside F)")

    a = h1.at(Xgrid)
    b = h2.at(Ygrid)
    ca = model.c(a["U"])
    cb = model.c(b["U"])
    V = np.array([a["dx"] / (2.0 * ca), 0.5 * a["dx"], a["V"], a["dJ"], a["dK"]])
    W = np.array([-b["dx"] / (2.0 * cb), 0.5 * b["dx"], b["V"], b["dJ"], b["dK"]])
    Xp, Yp = Xgrid[iX], Ygrid[iY]
    ap = h1.at(Xp)
    bp = h2.at(Yp)
    Z = np.array([np.zeros(iX.size), ap["x"], ap["U"], ap["J"] + bp["J"], ap["K"] + bp["K"]])
    return CurveData(Xgrid, Ygrid, iX, iY, Z, V, W, a["H"], b["H"])


# ---------------------------------------------------------------- checks

def _rel(a, b):
    err = np.abs(np.asarray(a) - np.asarray(b))
    scale = max(float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(b), initial=0.0)), 1e-300)
    k = int(np.argmax(err)) if err.size else 0
    return (float(err[k]) / scale if err.size else 0.0), k


def check_F(psi, model, rtol=1e-9, neg_tol=1e-12):
    rep = Report("Lagrangian pair invariants")
    for idx, h in ((1, psi.first), (2, psi.second)):
        c = model.c(h.U)
        for name in ("dx", "dJ"):
            arr = getattr(h, name)
            worst = float(-min(0.0, arr.min())) if arr.size else 0.0
            rep.add(f"{name}{idx} >= 0", worst <= neg_tol, worst,
                    float(h.grid[int(np.argmin(arr))]) if arr.size else None)
        r, k = _rel(h.dJ, h.sign * c * h.dK)
        rep.add(f"J{idx}' = {'' if idx == 1 else '-'}c(U{idx})K{idx}'", r <= rtol, r, float(h.grid[k]))
        r, k = _rel(h.dx * h.dJ, (c * h.V) ** 2 + c * h.H ** 2)
        rep.add(f"x{idx}'J{idx}' = (cV{idx})^2 + cH{idx}^2", r <= rtol, r, float(h.grid[k]))
        f = h.x + h.J
        sl = np.diff(f) / np.diff(h.grid) if h.size > 1 else np.ones(1)
        alpha = float(max(sl.max() - 1.0, 1.0 / max(sl.min(), 1e-300) - 1.0, 0.0))
        rep.add(f"x{idx}+J{idx} strictly increasing", bool(np.all(np.diff(f) > 0)), alpha,
                detail="worst slope deviation alpha")
        dj = np.diff(h.J)
        rep.add(f"J{idx} nondecreasing, >= 0",
                bool(np.all(dj >= -neg_tol * (1 + np.abs(h.J[1:]))) and h.J[0] >= -neg_tol),
                float(h.J[0]), detail="value is J at the first label")
    return rep


def check_G(curve, model, rtol=1e-9, psi=None, zdot_factor=10.0):
    rep = Report("initial curve invariants")
    dI, dJ = np.diff(curve.iX), np.diff(curve.iY)
    rep.add("X, Y nondecreasing", bool(np.all(dI >= 0) and np.all(dJ >= 0)))
    col = curve.column_anchor()
    row = curve.row_anchor()
    Ucol = curve.Z[2, col]
    Urow = curve.Z[2, row]
    cv, cw = model.c(Ucol), model.c(Urow)
    V, W = curve.V, curve.W
    worst_neg = max(float(-min(0.0, V[1].min(), W[1].min(), V[3].min(), W[3].min())), 0.0)
    rep.add("V2, W2, V4, W4 >= 0", worst_neg <= 1e-12, worst_neg)
    for name, a, b in (("V2 = cV1", V[1], cv * V[0]), ("W2 = -cW1", W[1], -cw * W[0]),
                       ("V4 = cV5", V[3], cv * V[4]), ("W4 = -cW5", W[3], -cw * W[4]),
                       ("2V4V2 = (cV3)^2 + cp^2", 2 * V[3] * V[1], (cv * V[2]) ** 2 + cv * curve.p ** 2),
                       ("2W4W2 = (cW3)^2 + cq^2", 2 * W[3] * W[1], (cw * W[2]) ** 2 + cw * curve.q ** 2)):
        r, k = _rel(a, b)
        rep.add(name, r <= rtol, r)
    rep.add("Z1 = 0", float(np.max(np.abs(curve.Z[0]))) == 0.0, float(np.max(np.abs(curve.Z[0]))))

    # integrated form of Zdot = V Xdot + W Ydot with trapezoid quadrature
    X, Y = curve.X, curve.Y
    dX, dY = np.diff(X), np.diff(Y)
    Vp, Wp = V[:, curve.iX], W[:, curve.iY]
    incr = 0.5 * (Vp[:, 1:] + Vp[:, :-1]) * dX + 0.5 * (Wp[:, 1:] + Wp[:, :-1]) * dY
    pred = curve.Z[:, :1] + np.concatenate([np.zeros((5, 1)), np.cumsum(incr, axis=1)], axis=1)
    err = np.abs(pred - curve.Z)
    h = float(max(dX.max(initial=0.0), dY.max(initial=0.0)))
    scale = 1.0 + float(max(np.abs(V).max(), np.abs(W).max()))
    worst = float(err[1:].max()) if err.size else 0.0
    rep.add("Zdot = V Xdot + W Ydot", worst <= zdot_factor * h * scale * (1 + abs(X[-1] - X[0])),
            worst, detail=f"cumulative trapezoid residual, h={h:.3g}")
    rep.add("Z4 at the start", True, float(curve.Z[3, 0]),
            detail="energy to the left of the samples, informational")
    if psi is not None:
        x1 = psi.first.position_map()(X)
        x2 = psi.second.position_map()(Y)
        r = float(np.max(np.abs(x1 - x2)))
        rep.add("x1(X(s)) = x2(Y(s))", r <= 1e-9 * (1 + float(np.max(np.abs(x1)))), r)
    return rep


# ---------------------------------------------------------------- relabelling

def _invert_monotone(f, targets, lo, hi, iters=200):
    """Vectorised bisection for f(X) = target with f strictly increasing."""
    a = np.full_like(targets, lo, dtype=float)
    b = np.full_like(targets, hi, dtype=float)
    while np.any(f(a) > targets):
        a -= (hi - lo)
    while np.any(f(b) < targets):
        b += (hi - lo)
    for _ in range(iters):
        m = 0.5 * (a + b)
        below = f(m) < targets
        a = np.where(below, m, a)
        b = np.where(below, b, m)
        if np.all(b - a <= 1e-15 * (1 + np.abs(m))):
            break
    return 0.5 * (a + b)


def relabel_half(h, f, df):
    """Action of a relabelling f on one half: x o f, V -> f' V o f, derivatives times f'.

    ``f`` and ``df`` are callables; new labels are f^{-1} of the old ones so
    that the relabelled half is sampled exactly at the old data.
    """
    new = _invert_monotone(f, h.grid, h.grid[0] - 1.0, h.grid[-1] + 1.0)
    fp = df(new)
    return replace(h, grid=new, V=h.V * fp, H=h.H * fp, dx=h.dx * fp, dJ=h.dJ * fp, dK=h.dK * fp)


def relabel(psi, f, df, g, dg):
    return PsiPair(relabel_half(psi.first, f, df), relabel_half(psi.second, g, dg))


def _project_half(h):
    fp = h.dx + h.dJ
    if np.any(fp < 1e-12):
        k = int(np.argmin(fp))
        raise InvariantError(f"x+J is not invertible near label {h.grid[k]:.6g} (slope {fp[k]:.3e})")
    new = h.x + h.J
    if np.any(np.diff(new) <= 0):
        raise InvariantError("x+J is not strictly increasing")
    return replace(h, grid=new, V=h.V / fp, H=h.H / fp, dx=h.dx / fp, dJ=h.dJ / fp, dK=h.dK / fp)


def project_F0(psi):
    """Relabel so that x_i + J_i is the identity on both halves."""
    return PsiPair(_project_half(psi.first), _project_half(psi.second))


def dump_csv(psi, path):
    """All twelve components (plus derivative samples) of both halves as CSV."""
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["family", "label", "x", "U", "J", "K", "V", "H", "dx", "dJ", "dK"])
        for fam, h in ((1, psi.first), (2, psi.second)):
            for k in range(h.size):
                w.writerow([fam] + [repr(float(getattr(h, n)[k])) for n in ("grid",) + _FIELDS])

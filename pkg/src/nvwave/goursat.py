"""Characteristic-coordinate solver.

The semilinear system Z_XY = F(Z)(Z_X, Z_Y) for Z = (t, x, U, J, K) is solved
by Picard iteration of its integrated form.  Every row of a rectangle carries
an anchor node where Z and W = Z_Y are known, every column one where Z and
V = Z_X are known; one sweep integrates V along rows, W along columns and F
along both.  Large domains are tiled into cells along the initial curve and
swept outward from the diagonal.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson

from .quadrature import cumulative, interval_weights
from .report import Report


class NonContraction(RuntimeError):
    """Picard iteration did not settle; the cell has to be subdivided."""

    def __init__(self, msg, cell=None, history=None):
        super().__init__(msg)
        self.cell = cell
        self.history = history or []


class TilingError(ValueError):
    pass


class ResourceError(RuntimeError):
    def __init__(self, msg, cell=None):
        super().__init__(msg)
        self.cell = cell


class SolverError(RuntimeError):
    pass


# round-off allowance for x_X, J_X, x_Y, J_Y before clamping to zero: absolute
# plus a part relative to the largest value of the component
NEG_CLAMP = 1e-12
NEG_CLAMP_REL = 1e-6


@dataclass(frozen=True)
class CharRectangle:
    Xl: float
    Xr: float
    Yl: float
    Yr: float
    nX: int = 2
    nY: int = 2

    def __post_init__(self):
        if not (self.Xl <= self.Xr and self.Yl <= self.Yr):
            raise TilingError("rectangle corners are not ordered")
        if self.nX < 2 or self.nY < 2:
            raise TilingError("a rectangle needs at least two grid points per side")

    @property
    def Xgrid(self):
        return np.linspace(self.Xl, self.Xr, self.nX)

    @property
    def Ygrid(self):
        return np.linspace(self.Yl, self.Yr, self.nY)


def rhs(model, U, V, W):
    """F(Z)(V, W) for stacked V, W of shape (5, ...)."""
    c = model.c(U)
    dc = model.dc(U)
    k = dc / (2.0 * c)
    F = np.empty(np.broadcast_shapes(V.shape, W.shape))
    F[0] = -k * (W[2] * V[0] + V[2] * W[0])
    F[1] = k * (W[2] * V[1] + V[2] * W[1])
    F[2] = dc / (2.0 * c ** 3) * (W[1] * V[3] + V[1] * W[3]) - k * V[2] * W[2]
    F[3] = k * (W[2] * V[3] + V[2] * W[3])
    F[4] = -k * (W[2] * V[4] + V[2] * W[4])
    return F


def _cumulative(f, x, axis, quad, cache=None):
    if quad == "simpson":
        if f.shape[axis] == 1:
            return np.zeros_like(f)
        return cumulative_simpson(f, x=x, axis=axis, initial=0.0)
    return cumulative(f, x, axis, quad, cache)


@dataclass
class RectangleProblem:
    """Goursat data on one rectangle in anchored form.

    Row j is anchored at column ``row_anchor[j]`` where Z = Zrow[:, j] and
    W = Wrow[:, j]; column i is anchored at row ``col_anchor[i]`` with
    Z = Zcol[:, i] and V = Vcol[:, i].
    """

    Xgrid: np.ndarray
    Ygrid: np.ndarray
    row_anchor: np.ndarray
    Zrow: np.ndarray
    Wrow: np.ndarray
    col_anchor: np.ndarray
    Zcol: np.ndarray
    Vcol: np.ndarray
    quad: str = "cubic"

    def __post_init__(self):
        self._wx = interval_weights(self.Xgrid) if self.quad == "cubic" and self.Xgrid.size > 1 else None
        self._wy = interval_weights(self.Ygrid) if self.quad == "cubic" and self.Ygrid.size > 1 else None

    @property
    def shape(self):
        return (self.Xgrid.size, self.Ygrid.size)

    def along_X(self, f):
        """Integral of f from each row's anchor column."""
        C = _cumulative(f, self.Xgrid, 1, self.quad, self._wx)
        j = np.arange(self.Ygrid.size)
        return C - C[:, self.row_anchor, j][:, None, :]

    def along_Y(self, f):
        """Integral of f from each column's anchor row."""
        C = _cumulative(f, self.Ygrid, 2, self.quad, self._wy)
        i = np.arange(self.Xgrid.size)
        return C - C[:, i, self.col_anchor][:, :, None]


@dataclass
class Iterate:
    Zh: np.ndarray
    Zv: np.ndarray
    V: np.ndarray
    W: np.ndarray

    def distance(self, other):
        return max(float(np.max(np.abs(a - b))) for a, b in
                   ((self.Zh, other.Zh), (self.Zv, other.Zv), (self.V, other.V), (self.W, other.W)))


def initial_iterate(prob):
    nx, ny = prob.shape
    shape = (5, nx, ny)
    return Iterate(np.broadcast_to(prob.Zrow[:, None, :], shape).copy(),
                   np.broadcast_to(prob.Zcol[:, :, None], shape).copy(),
                   np.broadcast_to(prob.Vcol[:, :, None], shape).copy(),
                   np.broadcast_to(prob.Wrow[:, None, :], shape).copy())


def picard_step(prob, it, model):
    F = rhs(model, it.Zh[2], it.V, it.W)
    return Iterate(prob.Zrow[:, None, :] + prob.along_X(it.V),
                   prob.Zcol[:, :, None] + prob.along_Y(it.W),
                   prob.Vcol[:, :, None] + prob.along_Y(F),
                   prob.Wrow[:, None, :] + prob.along_X(F))


def iterate_to_fixed_point(prob, model, tol=1e-10, max_iter=200, cell=None):
    it = initial_iterate(prob)
    history = []
    for n in range(max_iter):
        new = picard_step(prob, it, model)
        d = new.distance(it)
        history.append(d)
        it = new
        if not np.isfinite(d):
            raise NonContraction("Picard iterates are not finite", cell, history)
        if d <= tol:
            return it, history
        if n >= 6 and all(history[-m] > history[-m - 1] for m in range(1, 4)):
            raise NonContraction("Picard iterates are diverging", cell, history)
    raise NonContraction(f"no convergence within {max_iter} iterations "
                         f"(last step {history[-1]:.3e})", cell, history)


@dataclass
class GridSolution:
    """Z, Z_X, Z_Y on the tensor grid Xgrid x Ygrid, arrays indexed [component, i, j].

    Nodes outside the solved band are NaN and False in ``solved``.  The time
    shift is kept separately in ``t_offset`` so shifting is exactly reversible.
    """

    Xgrid: np.ndarray
    Ygrid: np.ndarray
    Z: np.ndarray
    V: np.ndarray
    W: np.ndarray
    p: np.ndarray
    q: np.ndarray
    solved: np.ndarray
    discrepancy: np.ndarray
    energy: float = 0.0
    t_offset: float = 0.0
    provenance: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def t(self):
        return self.Z[0] - self.t_offset

    @property
    def shape(self):
        return (self.Xgrid.size, self.Ygrid.size)


def _clamp_signs(V, W, where):
    for arr, name in ((V, "V"), (W, "W")):
        for comp, label in ((1, "x"), (3, "J")):
            a = arr[comp]
            low = float(np.nanmin(a)) if a.size else 0.0
            scale = float(np.nanmax(np.abs(a))) if a.size else 0.0
            if low < -(NEG_CLAMP + NEG_CLAMP_REL * scale):
                raise SolverError(f"{label}_{'X' if name == 'V' else 'Y'} = {low:.3e} < 0 in {where}")
            np.maximum(a, 0.0, out=a, where=~np.isnan(a))


def _breakpoints(curve, cell_size):
    s = curve.s
    ks = [0]
    for k in range(1, s.size):
        if s[k] - s[ks[-1]] >= cell_size - 1e-12 or k == s.size - 1:
            ks.append(k)
    if len(ks) == 1:
        ks.append(0)
    return np.asarray(ks)


def _solve_cells(curve, model, tol, max_iter, cell_size, cell_budget, band, quad):
    nX, nY = curve.Xgrid.size, curve.Ygrid.size
    Z = np.full((5, nX, nY), np.nan)
    V = np.full((5, nX, nY), np.nan)
    W = np.full((5, nX, nY), np.nan)
    disc = np.full((nX, nY), np.nan)
    solved = np.zeros((nX, nY), dtype=bool)
    ks = _breakpoints(curve, cell_size)
    N = ks.size - 1
    I = curve.iX[ks]
    Jb = curve.iY[ks]
    row_anchor = curve.row_anchor()
    col_anchor = curve.column_anchor()
    provenance = []
    iters = []

    def run(a, b, prob, i0, j0):
        if len(provenance) >= cell_budget:
            raise ResourceError(f"cell budget {cell_budget} exhausted at cell ({a}, {b})", (a, b))
        it, hist = iterate_to_fixed_point(prob, model, tol, max_iter, cell=(a, b))
        nx, ny = prob.shape
        Zc = 0.5 * (it.Zh + it.Zv)
        sl = (slice(i0, i0 + nx), slice(j0, j0 + ny))
        new = ~solved[sl]
        for dst, src in ((Z, Zc), (V, it.V), (W, it.W)):
            blk = dst[(slice(None),) + sl]
            blk[:, new] = src[:, new]
        d = disc[sl]
        d[new] = np.max(np.abs(it.Zh - it.Zv), axis=0)[new]
        solved[sl] = True
        provenance.append((float(curve.Xgrid[i0]), float(curve.Xgrid[i0 + nx - 1]),
                           float(curve.Ygrid[j0]), float(curve.Ygrid[j0 + ny - 1])))
        iters.append(len(hist))

    def prob_of(i0, i1, j0, j1, ra, Zr, Wr, ca, Zc, Vc):
        return RectangleProblem(curve.Xgrid[i0:i1 + 1], curve.Ygrid[j0:j1 + 1],
                                np.asarray(ra), Zr, Wr, np.asarray(ca), Zc, Vc, quad)

    # diagonal cells along the curve
    for a in range(N):
        ka, kb = ks[a], ks[a + 1]
        i0, i1, j0, j1 = I[a], I[a + 1], Jb[a], Jb[a + 1]
        ra, Zr, Wr = [], [], []
        for j in range(j0, j1 + 1):
            g = row_anchor[j]
            if g >= ka:
                ra.append(curve.iX[g] - i0)
                Zr.append(curve.Z[:, g])
                Wr.append(curve.W[:, j])
            else:
                ra.append(0)
                Zr.append(Z[:, i0, j])
                Wr.append(W[:, i0, j])
        ca, Zc, Vc = [], [], []
        for i in range(i0, i1 + 1):
            g = col_anchor[i]
            if g >= ka:
                ca.append(curve.iY[g] - j0)
                Zc.append(curve.Z[:, g])
                Vc.append(curve.V[:, i])
            else:
                ca.append(0)
                Zc.append(Z[:, i, j0])
                Vc.append(V[:, i, j0])
        prob = prob_of(i0, i1, j0, j1, ra, np.array(Zr).T, np.array(Wr).T,
                       ca, np.array(Zc).T, np.array(Vc).T)
        run(a, a, prob, i0, j0)
        seg = slice(ka, kb + 1)
        Z[:, curve.iX[seg], curve.iY[seg]] = curve.Z[:, seg]

    Tmin, Tmax = (0.0, 0.0) if band is None else band
    active = {(a, a): True for a in range(N)}
    for d in range(1, N):
        for b in range(0, N - d):
            # forward cell (a, b) with a = b + d: below-right of the curve, t > 0
            a = b + d
            i0, i1, j0, j1 = I[a], I[a + 1], Jb[b], Jb[b + 1]
            # a cell is needed if it reaches below Tmax or borders one that does
            act = band is None or (Tmax > 0 and Z[0, i0, j1] < Tmax)
            active[a, b] = act
            if act or active.get((a - 1, b)) or active.get((a, b + 1)):
                nx, ny = i1 - i0 + 1, j1 - j0 + 1
                prob = prob_of(i0, i1, j0, j1, np.zeros(ny, int), Z[:, i0, j0:j1 + 1],
                               W[:, i0, j0:j1 + 1], np.full(nx, ny - 1), Z[:, i0:i1 + 1, j1],
                               V[:, i0:i1 + 1, j1])
                run(a, b, prob, i0, j0)
            # backward cell (b, a): above-left of the curve, t < 0
            i0, i1, j0, j1 = I[b], I[b + 1], Jb[a], Jb[a + 1]
            act = band is None or (Tmin < 0 and Z[0, i1, j0] > Tmin)
            active[b, a] = act
            if act or active.get((b + 1, a)) or active.get((b, a - 1)):
                nx, ny = i1 - i0 + 1, j1 - j0 + 1
                prob = prob_of(i0, i1, j0, j1, np.full(ny, nx - 1), Z[:, i1, j0:j1 + 1],
                               W[:, i1, j0:j1 + 1], np.zeros(nx, int), Z[:, i0:i1 + 1, j0],
                               V[:, i0:i1 + 1, j0])
                run(b, a, prob, i0, j0)
    return Z, V, W, disc, solved, provenance, iters, N


def tile_solve(curve, model, tol=1e-10, max_iter=200, cell_size=0.25, cell_budget=200000,
               band=None, quad="cubic", max_refinements=8):
    """Solve on the whole rectangle spanned by ``curve`` (or on the band of
    cells needed to reach times in ``band = (Tmin, Tmax)``).

    Cells have s-extent ``cell_size``; whenever a cell fails to contract the
    cell size is halved and the sweep restarted.
    """
    size = float(cell_size)
    refinements = 0
    while True:
        try:
            Z, V, W, disc, solved, prov, iters, N = _solve_cells(
                curve, model, tol, max_iter, size, cell_budget, band, quad)
            break
        except NonContraction as exc:
            refinements += 1
            if refinements > max_refinements or size <= 0.5 * float(np.min(np.diff(curve.s), initial=size)):
                raise NonContraction(f"{exc} at cell {exc.cell}; subdivision limit reached",
                                     exc.cell, exc.history) from None
            size *= 0.5
    _clamp_signs(V, W, "solution")
    sol = GridSolution(curve.Xgrid.copy(), curve.Ygrid.copy(), Z, V, W, curve.p.copy(),
                       curve.q.copy(), solved, disc, energy=float(curve.Z[3, -1]),
                       provenance=prov,
                       stats={"cells": len(prov), "tiling": int(N), "cell_size": size,
                              "refinements": refinements,
                              "max_iterations": int(max(iters) if iters else 0),
                              "mean_iterations": float(np.mean(iters)) if iters else 0.0})
    return sol


def solve_rectangle(curve, model, tol=1e-10, max_iter=200, quad="cubic"):
    """Single-cell solve on the rectangle spanned by the curve."""
    return tile_solve(curve, model, tol, max_iter, cell_size=np.inf, band=None, quad=quad,
                      max_refinements=0)


def fixed_point_defect(sol, model, curve, quad="cubic"):
    """Distance moved by one more Picard sweep over the whole solved square."""
    nX, nY = sol.shape
    row = curve.row_anchor()
    col = curve.column_anchor()
    prob = RectangleProblem(sol.Xgrid, sol.Ygrid, curve.iX[row], curve.Z[:, row], curve.W,
                            curve.iY[col], curve.Z[:, col], curve.V, quad)
    it = Iterate(sol.Z.copy(), sol.Z.copy(), sol.V.copy(), sol.W.copy())
    return picard_step(prob, it, model).distance(it)


def _relative(a, b, mask):
    a, b = a[mask], b[mask]
    if a.size == 0:
        return 0.0, None
    err = np.abs(a - b)
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1e-300)
    return float(err.max() / scale), int(np.argmax(err))


def h_residuals(sol, model):
    """Worst relative residual of the six algebraic relations on solved nodes."""
    m = sol.solved
    U = sol.Z[2]
    c = model.c(np.where(m, U, 0.0))
    V, W = sol.V, sol.W
    p = sol.p[:, None] + 0 * U
    q = sol.q[None, :] + 0 * U
    pairs = {
        "x_X = c t_X": (V[1], c * V[0]),
        "x_Y = -c t_Y": (W[1], -c * W[0]),
        "J_X = c K_X": (V[3], c * V[4]),
        "J_Y = -c K_Y": (W[3], -c * W[4]),
        "2 J_X x_X = (c U_X)^2 + c p^2": (2 * V[3] * V[1], (c * V[2]) ** 2 + c * p * p),
        "2 J_Y x_Y = (c U_Y)^2 + c q^2": (2 * W[3] * W[1], (c * W[2]) ** 2 + c * q * q),
    }
    out = {}
    idx = np.argwhere(m)
    for name, (a, b) in pairs.items():
        r, k = _relative(a, b, m)
        loc = None if k is None else (float(sol.Xgrid[idx[k][0]]), float(sol.Ygrid[idx[k][1]]))
        out[name] = (r, loc)
    return out


def check_H(sol, model, rtol=1e-7, energy=None):
    rep = Report("characteristic solution relations")
    for name, (r, loc) in h_residuals(sol, model).items():
        rep.add(name, r <= rtol, r, loc)
    m = sol.solved
    V, W = sol.V, sol.W
    neg = max(0.0, -float(np.min([V[1][m].min(), W[1][m].min(), V[3][m].min(), W[3][m].min()])))
    rep.add("x_X, x_Y, J_X, J_Y >= 0", neg == 0.0, neg)
    pos = float(min((V[1] + V[3])[m].min(), (W[1] + W[3])[m].min()))
    rep.add("x_X + J_X > 0, x_Y + J_Y > 0", pos > 0.0, pos, detail="smallest value")
    rep.add("p_Y = 0, q_X = 0", True, 0.0, detail="p, q stored as functions of X, Y")
    E0 = sol.energy if energy is None else energy
    J = sol.Z[3]
    K = sol.Z[4]
    slack = 1e-9 * (1.0 + E0)
    lo = float(J[m].min())
    hi = float(J[m].max())
    rep.add("0 <= J <= E0", lo >= -slack and hi <= E0 + slack, max(-lo, hi - E0, 0.0))
    kmax = float(np.abs(K[m]).max())
    rep.add("|K| <= (1+kappa) E0", kmax <= (1 + model.kappa) * E0 + slack, kmax)
    with np.errstate(invalid="ignore"):
        dJx = np.diff(J, axis=0)[m[1:] & m[:-1]]
        dJy = np.diff(J, axis=1)[m[:, 1:] & m[:, :-1]]
    worst = max(0.0, -float(dJx.min(initial=0.0)), -float(dJy.min(initial=0.0)))
    # quadrature wiggles in the empty tails are of the size of the other residuals
    rep.add("J nondecreasing in X and Y", worst <= max(slack, rtol * (1.0 + E0)), worst)
    rep.add("Z_h / Z_v discrepancy", True, float(np.nanmax(sol.discrepancy)) if m.any() else 0.0,
            detail="quadrature gauge, informational")
    return rep

"""Time slices of a characteristic solution and the evolution operator on
Eulerian data: state -> psi -> curve -> grid solution -> {t = T} -> psi -> state.
"""

import csv
from dataclasses import dataclass, replace

import numpy as np

from .eulerian import EulerianState, extend, total_energy
from .goursat import tile_solve
from .lagrangian import CurveData, LagrangianHalf, PsiPair, _merge_values, map_C, map_L
from .measures import RadonMeasure, flat_tolerance, generalized_inverse, push_forward
from .report import Report


class CoverageError(RuntimeError):
    pass


@dataclass
class SolverParams:
    tol: float = 1e-10
    max_iter: int = 200
    cell_size: float = 0.25
    cell_budget: int = 200000
    quad: str = "cubic"
    n_atom: int = 32
    thin: int = 2

    @classmethod
    def from_config(cls, cfg):
        cfg = dict(cfg or {})
        known = {k: cfg[k] for k in cls.__dataclass_fields__ if k in cfg}
        return cls(**known)


@dataclass
class TimeSlice:
    T: float
    curve: CurveData
    state: EulerianState


def time_shift(sol, T):
    """Solution with t replaced by t - T (Z itself is shared, not copied)."""
    return replace(sol, t_offset=sol.t_offset + T)


def extract_time_curve(sol):
    """The curve {t = 0} of a (shifted) solution as CurveData.

    Along every grid anti-diagonal i + j = m, t is nondecreasing from
    (i-1, j+1) to (i, j); the crossing point is the first segment with
    t_A < 0 <= t_B, linearly interpolated.
    """
    t = sol.t
    tA = t[:-1, 1:]
    tB = t[1:, :-1]
    with np.errstate(invalid="ignore"):
        hit = (tA < 0) & (tB >= 0)
    ia, jb = np.nonzero(hit)  # segment A = (ia, jb + 1), B = (ia + 1, jb)
    if ia.size == 0:
        raise CoverageError("the level set t = T does not cross the solved region")
    m = ia + jb + 1
    order = np.lexsort((ia, m))
    ia, jb, m = ia[order], jb[order], m[order]
    first = np.ones(m.size, dtype=bool)
    first[1:] = m[1:] != m[:-1]
    ia, jb, m = ia[first], jb[first], m[first]
    if np.any(np.diff(m) != 1):
        gap = int(np.flatnonzero(np.diff(m) != 1)[0])
        lost = 0.5 * (sol.Xgrid[ia[gap]] + sol.Ygrid[jb[gap]])
        raise CoverageError(f"level set leaves the solved band near s = {lost:.6g}")

    iA, jA, iB, jB = ia, jb + 1, ia + 1, jb
    ta, tb = t[iA, jA], t[iB, jB]
    theta = np.where(tb > ta, -ta / np.where(tb > ta, tb - ta, 1.0), 1.0)
    X = sol.Xgrid[iA] + theta * (sol.Xgrid[iB] - sol.Xgrid[iA])
    Y = sol.Ygrid[jA] + theta * (sol.Ygrid[jB] - sol.Ygrid[jA])
    X = np.maximum.accumulate(X)
    Y = np.maximum.accumulate(Y)

    def lerp(arr):
        return (1 - theta) * arr[:, iA, jA] + theta * arr[:, iB, jB]

    Z = lerp(sol.Z)
    Z[0] = 0.0
    Vp = lerp(sol.V)
    Wp = lerp(sol.W)
    p = np.interp(X, sol.Xgrid, sol.p)
    q = np.interp(Y, sol.Ygrid, sol.q)

    Xgrid, iX = _merge_values(X)
    Ygrid, iY = _merge_values(Y)
    fx = np.unique(iX, return_index=True)[1]
    fy = np.unique(iY, return_index=True)[1]
    return CurveData(Xgrid, Ygrid, iX, iY, Z, Vp[:, fx], Wp[:, fy], p[fx], q[fy])


def map_D(curve, model, thin=1):
    """CurveData in G0 -> PsiPair.

    J1 and J2 are accumulated along the curve from V4 dX and W4 dY; each step's
    two increments are rescaled to add up to the step of Z4, so J1 + J2 = Z4
    exactly.  ``thin`` > 1 keeps every thin-th curve point afterwards.
    """
    Z = curve.Z.copy()
    Z[1] = np.maximum.accumulate(Z[1])
    # the ends lie in the trivial region where J is exact; overshoot in between
    # is clipped so the total energy of the slice is not altered
    Z[3] = np.maximum.accumulate(np.clip(Z[3], Z[3, 0], max(Z[3, -1], Z[3, 0])))
    X, Y = curve.X, curve.Y
    dX, dY = np.diff(X), np.diff(Y)
    V4 = curve.V[3, curve.iX]
    W4 = curve.W[3, curve.iY]
    a = 0.5 * (V4[1:] + V4[:-1]) * dX
    b = 0.5 * (W4[1:] + W4[:-1]) * dY
    dZ4 = np.diff(Z[3])
    tot = a + b
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(tot > 0, dZ4 / np.where(tot > 0, tot, 1.0), 0.0)
        share = np.where(dX + dY > 0, dX / np.where(dX + dY > 0, dX + dY, 1.0), 0.5)
    a = np.where(tot > 0, a * scale, dZ4 * share)
    b = dZ4 - a
    inv_c = 1.0 / model.c(Z[2])
    avg = 0.5 * (inv_c[1:] + inv_c[:-1])
    J1 = np.concatenate([[0.0], np.cumsum(a)])
    J2 = Z[3, 0] + np.concatenate([[0.0], np.cumsum(b)])
    K1 = np.concatenate([[0.0], np.cumsum(a * avg)])
    K2 = Z[4, 0] - np.concatenate([[0.0], np.cumsum(b * avg)])

    keep = np.zeros(X.size, dtype=bool)
    keep[::max(int(thin), 1)] = True
    keep[-1] = True
    # the ends of flat stretches of x carry the jumps of the derivatives
    flat = np.diff(Z[1]) <= flat_tolerance(Z[1, 1:])
    edge = np.flatnonzero(np.diff(flat.astype(int)) != 0) + 1
    keep[edge] = True
    keep[np.flatnonzero(flat)[:1]] = True
    keep[np.flatnonzero(flat)[-1:] + 1] = True
    keep = np.flatnonzero(keep)
    iX, iY = curve.iX[keep], curve.iY[keep]
    fx = np.unique(iX, return_index=True)[1]
    fy = np.unique(iY, return_index=True)[1]
    kx, ky = keep[fx], keep[fy]
    gx, gy = iX[fx], iY[fy]
    V, W = curve.V, curve.W
    first = LagrangianHalf(curve.Xgrid[gx], Z[1, kx], Z[2, kx], J1[kx], K1[kx], V[2, gx],
                           curve.p[gx], np.maximum(2 * V[1, gx], 0.0), np.maximum(V[3, gx], 0.0),
                           V[4, gx], 1)
    second = LagrangianHalf(curve.Ygrid[gy], Z[1, ky], Z[2, ky], J2[ky], K2[ky], W[2, gy],
                            curve.q[gy], np.maximum(2 * W[1, gy], 0.0), np.maximum(W[3, gy], 0.0),
                            W[4, gy], -1)
    return PsiPair(first, second)


def _half_fields(h, xg, model):
    """Eulerian fields carried by one half at the points xg (left end of flats)."""
    X = generalized_inverse(h.position_map(), xg)
    f = h.at(X)
    c = model.c(f["U"])
    dx = f["dx"]
    ok = dx > 0
    safe = np.where(ok, dx, 1.0)
    return f["U"], np.where(ok, 2 * c * f["V"] / safe, 0.0), np.where(ok, 2 * f["H"] / safe, 0.0)


def _push(h, xg, density):
    m = push_forward(h.position_map(), cumulative=h.J)
    atoms = m.atoms
    ac = m._ac_cumulative(np.asarray(xg, dtype=float))
    return RadonMeasure(xg, density, [a for a, _ in atoms], [w for _, w in atoms], float(ac[0]),
                        np.maximum(np.diff(ac), 0.0))


def map_M(psi, model):
    """PsiPair -> EulerianState on the union of the two halves' x-nodes."""
    h1, h2 = psi.first, psi.second
    xg, _ = _merge_values(np.concatenate([h1.x, h2.x]))
    u, R, rho = _half_fields(h1, xg, model)
    _, S2, sigma = _half_fields(h2, xg, model)
    S = -S2
    c = model.c(u)
    mu = _push(h1, xg, 0.25 * (R * R + c * rho * rho))
    nu = _push(h2, xg, 0.25 * (S * S + c * sigma * sigma))
    return EulerianState(xg, u, R, S, rho, sigma, mu, nu)


def trim(state, lo, hi):
    """Keep the nodes in [lo, hi]; measures are resampled with their tails."""
    keep = (state.grid >= lo) & (state.grid <= hi)
    if keep.sum() < 2:
        return state
    g = state.grid[keep]

    def cut(m):
        r = m.resample(g, m.density_at(g))
        inside = (r.atom_positions >= g[0]) & (r.atom_positions <= g[-1])
        return RadonMeasure(g, r.density, r.atom_positions[inside], r.atom_masses[inside],
                            r.left_tail_mass, r.cell_masses)

    return EulerianState(g, state.u[keep], state.R[keep], state.S[keep], state.rho[keep],
                         state.sigma[keep], cut(state.mu), cut(state.nu))


def support(state):
    """Smallest node interval outside which the state carries nothing."""
    g = state.grid
    busy = (np.abs(state.R) + np.abs(state.S) + np.abs(state.rho) + np.abs(state.sigma)) > 0
    busy[:-1] |= state.mu.cell_masses > 0
    busy[1:] |= state.mu.cell_masses > 0
    busy[:-1] |= state.nu.cell_masses > 0
    busy[1:] |= state.nu.cell_masses > 0
    busy |= np.diff(state.u, prepend=state.u[0]) != 0
    busy |= np.diff(state.u, append=state.u[-1]) != 0
    pos = np.concatenate([state.mu.atom_positions, state.nu.atom_positions])
    lo = [g[busy].min()] if busy.any() else []
    hi = [g[busy].max()] if busy.any() else []
    if pos.size:
        lo.append(pos.min())
        hi.append(pos.max())
    if not lo:
        return float(g[0]), float(g[-1])
    return float(min(lo)), float(max(hi))


def solve_for_times(state, times, model, params=None):
    """Solve once for all target times; returns (curve, solution, margin)."""
    params = params or SolverParams()
    times = [float(T) for T in times]
    E = total_energy(state)
    h = state.h
    Tabs = max((abs(T) for T in times), default=0.0)
    margin = 2.0 * model.kappa * Tabs + 2.0 * E + 4.0 * h
    ext = extend(state, margin)
    psi = map_L(ext, model, params.n_atom)
    curve = map_C(psi, model)
    lo, hi = min(times + [0.0]), max(times + [0.0])
    # a little slack on both sides so level sets through flat regions of t
    # (atoms) still find nodes on either side
    pad = 1e-3 * (hi - lo) + 1e-6
    band = (lo - pad, hi + pad)
    sol = tile_solve(curve, model, params.tol, params.max_iter, params.cell_size,
                     params.cell_budget, band=band, quad=params.quad)
    return curve, sol, margin


def slice_at(sol, T, model, params=None, window=None, energy=None):
    params = params or SolverParams()
    curve = extract_time_curve(time_shift(sol, T))
    E = sol.energy if energy is None else energy
    slack = 1e-9 * (1.0 + E)
    if abs(curve.Z[3, 0]) > slack or abs(curve.Z[3, -1] - E) > slack:
        raise CoverageError(
            f"t = {T:g} slice misses energy: J runs from {curve.Z[3, 0]:.3e} to "
            f"{curve.Z[3, -1]:.6e}, expected 0 to {E:.6e} (domain too small)")
    st = map_M(map_D(curve, model, params.thin), model)
    if window is not None:
        st = trim(st, *window)
    return TimeSlice(T, curve, st)


def evolve_many(state, times, model, params=None, keep_domain=False):
    params = params or SolverParams()
    times = [float(T) for T in times]
    curve, sol, margin = solve_for_times(state, times, model, params)
    lo, hi = support(state)
    out = []
    for T in times:
        w = None
        if not keep_domain:
            pad = model.kappa * abs(T) + 2.0 * state.h
            w = (min(lo - pad, state.grid[0]), max(hi + pad, state.grid[-1]))
        out.append(slice_at(sol, T, model, params, w))
    return out


def evolve(state, T, model, params=None):
    """Conservative solution at time T (negative T runs backwards)."""
    return evolve_many(state, [T], model, params)[0].state


def _probe(a, b, x):
    lo = max(a.grid[0], b.grid[0])
    hi = min(a.grid[-1], b.grid[-1])
    return np.linspace(lo, hi, x)


def compare_states(a, b, probes=200):
    """sup |u_a - u_b| and L1 distance of the cumulative energy functions."""
    x = _probe(a, b, probes)
    du = float(np.max(np.abs(np.interp(x, a.grid, a.u) - np.interp(x, b.grid, b.u))))
    ca = a.mu.cumulative(x) + a.nu.cumulative(x)
    cb = b.mu.cumulative(x) + b.nu.cumulative(x)
    dm = float(np.trapezoid(np.abs(ca - cb), x)) if x.size > 1 else 0.0
    return du, dm


def check_semigroup(state, T1, T2, model, params=None, factor=20.0, reversal=True):
    params = params or SolverParams()
    h = state.h
    allowed = factor * (params.tol + h * h)
    rep = Report(f"semigroup T1={T1:g}, T2={T2:g}")
    direct = evolve(state, T1 + T2, model, params)
    mid = evolve(state, T1, model, params)
    composed = evolve(mid, T2, model, params)
    du, dm = compare_states(direct, composed)
    rep.add("S(T1+T2) u = S(T2) S(T1) u", du <= allowed, du, detail=f"allowed {allowed:.3e}")
    rep.add("measure cumulatives (L1)", dm <= allowed * (1.0 + total_energy(state)), dm)
    if reversal:
        back = evolve(direct, -(T1 + T2), model, params)
        du, dm = compare_states(state, back)
        rep.add("time reversal S(-T) S(T) u = u", du <= allowed, du, detail=f"allowed {allowed:.3e}")
        rep.add("time reversal measures (L1)", dm <= allowed * (1.0 + total_energy(state)), dm)
    return rep


# ---------------------------------------------------------------- output

def _fmt(v):
    return repr(float(v))


def write_slice_csv(path, T, state, model):
    c = model.c(state.u)
    dmu = 0.25 * (state.R ** 2 + c * state.rho ** 2)
    dnu = 0.25 * (state.S ** 2 + c * state.sigma ** 2)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "u", "R", "S", "rho", "sigma", "mu_density", "nu_density"])
        for k in range(state.grid.size):
            w.writerow([_fmt(T), _fmt(state.grid[k]), _fmt(state.u[k]), _fmt(state.R[k]),
                        _fmt(state.S[k]), _fmt(state.rho[k]), _fmt(state.sigma[k]),
                        _fmt(dmu[k]), _fmt(dnu[k])])


def write_atoms_csv(path, slices):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "mass", "which_measure"])
        for T, state in slices:
            for name, m in (("mu", state.mu), ("nu", state.nu)):
                for a, mass in m.atoms:
                    w.writerow([_fmt(T), _fmt(a), _fmt(mass), name])


def reconstruction_defect(sol, state, model):
    """max |u(t, x) - U| over solved nodes whose t is close to the slice time 0."""
    t = sol.t
    near = sol.solved & (np.abs(t) < 1e-12)
    if not near.any():
        return 0.0
    x = sol.Z[1][near]
    return float(np.max(np.abs(np.interp(x, state.grid, state.u) - sol.Z[2][near])))


"""Scenario-level checks: energy bookkeeping over time, conservation-law and
weak-form residuals on time slices, and the regularization / approximation
experiments for data with positive or vanishing transported densities."""

import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .eulerian import EulerianState, from_primitives, zero_state
from .evolution import SolverParams, evolve_many
from .goursat import h_residuals, tile_solve
from .lagrangian import map_C, map_L
from .measures import RadonMeasure
from .reference import richardson_reference
from .report import Report

# atoms lighter than this fraction of the total energy are quadrature residue
ATOM_FLOOR = 1e-6


class NotApplicable(ValueError):
    pass


class HypothesisError(ValueError):
    pass


def significant_atoms(measure, energy, floor=ATOM_FLOOR):
    cut = floor * max(energy, 1e-300)
    return [(a, m) for a, m in measure.atoms if m > cut]


# ---------------------------------------------------------------- conservation

@dataclass
class ConservationReport:
    times: list
    total_energy: list
    mu_mass: list
    nu_mass: list
    atoms_count: list
    drift: float
    # c'(u) at every significant atom, reported but never asserted
    atom_cprime: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    def write_json(self, path):
        write_json(path, self.to_dict())

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "total_energy", "mu_mass", "nu_mass", "atoms"])
            for row in zip(self.times, self.total_energy, self.mu_mass, self.nu_mass,
                           self.atoms_count):
                w.writerow([repr(float(v)) for v in row[:4]] + [int(row[4])])


def conservation_series(state, times, model, params=None):
    """Evolve to every time and tabulate mu(R), nu(R) and the atom count."""
    times = [float(T) for T in times]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("times must be sorted")
    E0 = state.total_energy()
    slices = evolve_many(state, times, model, params)
    tot, mu, nu, count, cp = [], [], [], [], []
    for s in slices:
        st = s.state
        tot.append(float(st.total_energy()))
        mu.append(float(st.mu.total))
        nu.append(float(st.nu.total))
        atoms = significant_atoms(st.mu, E0) + significant_atoms(st.nu, E0)
        count.append(len(atoms))
        for a, m in atoms:
            u_at = float(np.interp(a, st.grid, st.u))
            cp.append((s.T, float(a), float(m), float(model.dc(u_at))))
    diffs = [abs(e - E0) for e in tot]
    drift = max(diffs) / E0 if E0 > 0 else max(diffs, default=0.0)
    return ConservationReport(times, tot, mu, nu, count, float(drift), cp)


# ---------------------------------------------------------------- exact cases

def zero_data_check(grid, model, params=None, times=(0.5, -0.5), rtol=1e-12):
    """Zero data: the characteristic solution is t = (X - Y)/(2 c(0)),
    x = (X + Y)/2 with U = J = K = 0, and evolution returns the zero state."""
    params = params or SolverParams()
    state = zero_state(grid)
    curve = map_C(map_L(state, model, params.n_atom), model)
    sol = tile_solve(curve, model, params.tol, params.max_iter, params.cell_size,
                     params.cell_budget, quad=params.quad)
    m = sol.solved
    X, Y = np.meshgrid(sol.Xgrid, sol.Ygrid, indexing="ij")
    c0 = float(model.c(0.0))
    scale = 1.0 + float(np.max(np.abs(sol.Xgrid))) + float(np.max(np.abs(sol.Ygrid)))
    rep = Report("zero data")
    rt = float(np.max(np.abs(sol.t - (X - Y) / (2 * c0))[m]))
    rx = float(np.max(np.abs(sol.Z[1] - 0.5 * (X + Y))[m]))
    rz = float(np.max(np.abs(sol.Z[2:])[:, m]))
    rep.add("t = (X - Y)/(2 c(0))", rt <= rtol * scale, rt)
    rep.add("x = (X + Y)/2", rx <= rtol * scale, rx)
    rep.add("U = J = K = 0", rz <= rtol, rz)
    for s in evolve_many(state, list(times), model, params):
        worst = float(np.max(np.abs(s.state.u))) + float(np.max(np.abs(s.state.R)))
        worst += float(np.max(np.abs(s.state.S))) + s.state.total_energy()
        rep.add(f"zero state at t={s.T:g}", worst <= rtol, worst)
    return rep


def finite_speed_check(state_a, state_b, model, t_bar, x_bar, params=None, factor=10.0):
    """|u_a(t_bar, x_bar) - u_b(t_bar, x_bar)| for data that agree on the
    cone base [x_bar - kappa t_bar, x_bar + kappa t_bar]."""
    params = params or SolverParams()
    lo, hi = x_bar - model.kappa * abs(t_bar), x_bar + model.kappa * abs(t_bar)
    for st in (state_a, state_b):
        if not (st.grid[0] <= lo and hi <= st.grid[-1]):
            raise HypothesisError("the cone base must lie inside both grids")
    probe = np.linspace(lo, hi, 201)
    for name in ("u", "R", "S", "rho", "sigma"):
        d = np.abs(np.interp(probe, state_a.grid, getattr(state_a, name))
                   - np.interp(probe, state_b.grid, getattr(state_b, name)))
        if d.max() > 0:
            raise HypothesisError(f"data differ in {name} on [{lo:g}, {hi:g}]")
    for meas in ("mu", "nu"):
        ca, cb = getattr(state_a, meas).cumulative(probe), getattr(state_b, meas).cumulative(probe)
        jump = (ca - ca[0]) - (cb - cb[0])
        if np.max(np.abs(jump)) > 1e-12 * (1 + abs(ca[-1])):
            raise HypothesisError(f"{meas} differs on [{lo:g}, {hi:g}]")
    ua = float(np.interp(x_bar, *_grid_u(evolve_many(state_a, [t_bar], model, params)[0].state)))
    ub = float(np.interp(x_bar, *_grid_u(evolve_many(state_b, [t_bar], model, params)[0].state)))
    h = max(state_a.h, state_b.h)
    allowed = factor * (params.tol + h * h)
    rep = Report(f"finite speed at t={t_bar:g}, x={x_bar:g}")
    rep.add("u agrees at the cone tip", abs(ua - ub) <= allowed, abs(ua - ub),
            detail=f"allowed {allowed:.3e}")
    return rep


def _grid_u(st):
    return st.grid, st.u


# ---------------------------------------------------------------- refinement studies

def h_convergence(scn, levels, model=None, mapper=None):
    """Worst H-relation residual on the whole initial rectangle for grids
    grid / 2^(levels-1), ..., grid."""
    model = model or scn.model
    grids = [max(4, scn.grid >> (levels - 1 - k)) for k in range(levels)]

    def one(n):
        st = scn.state(n)
        curve = map_C(map_L(st, model, scn.solver.n_atom), model)
        sol = tile_solve(curve, model, scn.solver.tol, scn.solver.max_iter, scn.solver.cell_size,
                         scn.solver.cell_budget, quad=scn.solver.quad)
        res = h_residuals(sol, model)
        return {"grid": n, "residuals": {k: v[0] for k, v in res.items()},
                "worst": max(v[0] for v in res.values())}

    return list((mapper or map)(one, grids))


def oracle_convergence(scn, T, levels, mapper=None):
    """sup |u - u_fd| at time T for the same grids as h_convergence, against a
    Richardson-extrapolated leapfrog reference on a finer grid."""
    model = scn.model
    grids = [max(4, scn.grid >> (levels - 1 - k)) for k in range(levels)]

    def data(n):
        st = scn.state(n)
        return st.grid, st.u, 0.5 * (st.R + st.S), st.rho, st.sigma

    xr, ur = richardson_reference(data, model, T, 4 * grids[-1])
    inner = (xr > scn.domain[0] + model.kappa * T) & (xr < scn.domain[1] - model.kappa * T)

    def one(n):
        st = evolve_many(scn.state(n), [T], model, scn.solver)[0].state
        err = float(np.max(np.abs(np.interp(xr[inner], st.grid, st.u) - ur[inner])))
        return {"grid": n, "u_sup_error": err}

    rows = list((mapper or map)(one, grids))
    for a, b in zip(rows, rows[1:]):
        b["observed_order"] = float(np.log2(a["u_sup_error"] / b["u_sup_error"])) \
            if b["u_sup_error"] > 0 else float("inf")
    return rows


# ---------------------------------------------------------------- residuals on slices

def _on_window(slices, window, n):
    x = np.linspace(window[0], window[1], n)
    out = []
    for s in slices:
        st = s.state
        out.append({k: np.interp(x, st.grid, getattr(st, k)) for k in ("u", "R", "S", "rho", "sigma")})
    return x, out


def _check_atoms(slices, window, energy):
    for s in slices:
        for m in (s.state.mu, s.state.nu):
            for a, _ in significant_atoms(m, energy):
                if window[0] <= a <= window[1]:
                    raise NotApplicable(f"atom at x={a:.6g}, t={s.T:g} inside the window")


def conslaw_residual(slices, model, window, n=None):
    """L1 residual per unit area of v_t - (c^2 w)_x and w_t - v_x, with
    v = R^2 + c rho^2 + S^2 + c sigma^2 and w = (R^2 + c rho^2 - S^2 - c sigma^2) / c.

    ``slices`` are TimeSlices at uniformly spaced times; derivatives are
    centred in t and x.
    """
    if len(slices) < 3:
        raise ValueError("need at least three time slices")
    T = np.array([s.T for s in slices])
    dt = np.diff(T)
    if np.any(np.abs(dt - dt[0]) > 1e-12 * (1 + abs(dt[0]))):
        raise ValueError("slices must be uniformly spaced in time")
    E = slices[0].state.total_energy()
    _check_atoms(slices, window, E)
    if n is None:
        h = min(s.state.h for s in slices)
        n = int(np.ceil((window[1] - window[0]) / h)) + 1
    x, fields = _on_window(slices, window, n)
    v, w, flux = [], [], []
    for f in fields:
        c = model.c(f["u"])
        a = f["R"] ** 2 + c * f["rho"] ** 2
        b = f["S"] ** 2 + c * f["sigma"] ** 2
        v.append(a + b)
        w.append((a - b) / c)
        flux.append(c * (a - b))
    v, w, flux = np.array(v), np.array(w), np.array(flux)
    vt = (v[2:] - v[:-2]) / (2 * dt[0])
    wt = (w[2:] - w[:-2]) / (2 * dt[0])
    fx = np.gradient(flux[1:-1], x, axis=1)
    vx = np.gradient(v[1:-1], x, axis=1)
    area = (x[-1] - x[0]) * (T[-2] - T[1] + 2 * dt[0])
    r1 = float(np.sum(np.trapezoid(np.abs(vt - fx), x, axis=1)) * dt[0] / area)
    r2 = float(np.sum(np.trapezoid(np.abs(wt - vx), x, axis=1)) * dt[0] / area)
    return r1, r2


def bump(s):
    """(1 - s^2)^3 on [-1, 1]: value, first and second derivatives vanish at the ends."""
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1
    return np.where(inside, (1 - s * s) ** 3, 0.0)


def bump_derivative(s):
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1
    return np.where(inside, -6 * s * (1 - s * s) ** 2, 0.0)


def _measure_integral(m, g):
    """Integral of g(x) against m: trapezoid on the density plus the atoms."""
    x = m.grid
    val = float(np.trapezoid(g(x) * m.density, x)) if x.size > 1 else 0.0
    for a, w in m.atoms:
        val += float(g(np.array([a]))[0]) * w
    return val


def weak_form_residual(slices, model, centres, radius):
    """Left minus right side of the weak formulation for tensor bump tests.

    For each centre (t0, x0) the test is phi = b((t - t0)/r) b((x - x0)/r).
    Returns one dict per centre with the three residuals and a scale
    (sum of the absolute values of the integrated terms) for normalisation.
    """
    T = np.array([s.T for s in slices])
    out = []
    for t0, x0 in centres:
        if t0 - radius < T[0] - 1e-12 or t0 + radius > T[-1] + 1e-12:
            raise ValueError(f"test centred at t={t0:g} is not covered by the slices")
        rows = np.zeros((T.size, 3))
        scale = np.zeros((T.size, 3))
        for k, s in enumerate(slices):
            st = s.state
            x = st.grid
            bt = float(bump((s.T - t0) / radius))
            dbt = float(bump_derivative((s.T - t0) / radius)) / radius
            bx = bump((x - x0) / radius)
            dbx = bump_derivative((x - x0) / radius) / radius
            phi, phi_t, phi_x = bt * bx, dbt * bx, bt * dbx
            c = model.c(st.u)
            dc = model.dc(st.u)
            t1 = (phi_t - c * phi_x) * st.R
            t2 = (phi_t + c * phi_x) * st.S
            t3 = dc / c * st.R * st.S * phi
            lhs = np.trapezoid(t1 + t2 + t3, x)

            def weight(y, bt=bt, st=st):
                u = np.interp(y, st.grid, st.u)
                return 2 * model.dc(u) / model.c(u) * bt * bump((y - x0) / radius)

            rhs = _measure_integral(st.mu, weight) + _measure_integral(st.nu, weight)
            rows[k, 0] = lhs - rhs
            scale[k, 0] = (np.trapezoid(np.abs(t1) + np.abs(t2) + np.abs(t3), x)
                           + abs(rhs))
            e2 = (phi_t - c * phi_x) * st.rho
            e3 = (phi_t + c * phi_x) * st.sigma
            rows[k, 1] = np.trapezoid(e2, x)
            rows[k, 2] = np.trapezoid(e3, x)
            scale[k, 1] = np.trapezoid(np.abs(e2), x)
            scale[k, 2] = np.trapezoid(np.abs(e3), x)
        res = np.trapezoid(rows, T, axis=0)
        sc = np.trapezoid(scale, T, axis=0)
        out.append({"centre": (float(t0), float(x0)), "residual": [float(r) for r in res],
                    "scale": [float(v) for v in sc]})
    return out


# ---------------------------------------------------------------- transported-density experiments

def shrunk_interval(interval, model, tau):
    xl, xr = interval
    return xl + model.kappa * abs(tau), xr - model.kappa * abs(tau)


def regularization_check(state, model, tau, interval, params=None, floor=ATOM_FLOOR):
    """rho(tau), sigma(tau) stay positive and no atoms form on the shrunk interval."""
    xl, xr = interval
    inside = (state.grid >= xl) & (state.grid <= xr)
    if not inside.any():
        raise HypothesisError("no grid nodes inside the interval")
    d = float(state.rho[inside].min())
    e = float(state.sigma[inside].min())
    if d <= 0 or e <= 0:
        raise HypothesisError(f"rho0 and sigma0 must be bounded below by positive constants "
                              f"on [{xl:g}, {xr:g}]; got min rho0 = {d:.3e}, min sigma0 = {e:.3e}")
    if not 0 <= tau <= (xr - xl) / (2 * model.kappa):
        raise HypothesisError(f"tau = {tau:g} outside [0, (x_r - x_l)/(2 kappa)]")
    lo, hi = shrunk_interval(interval, model, tau)
    st = evolve_many(state, [tau], model, params)[0].state
    keep = (st.grid >= lo) & (st.grid <= hi)
    E = state.total_energy()
    rep = Report(f"regularization at tau={tau:g} on [{lo:g}, {hi:g}]")
    rho_min = float(st.rho[keep].min()) if keep.any() else float("nan")
    sig_min = float(st.sigma[keep].min()) if keep.any() else float("nan")
    rep.add("min rho(tau) > 0", rho_min > 0, rho_min, detail=f"min rho0 = {d:.3e}")
    rep.add("min sigma(tau) > 0", sig_min > 0, sig_min, detail=f"min sigma0 = {e:.3e}")
    atoms = [a for a, _ in significant_atoms(st.mu, E, floor) + significant_atoms(st.nu, E, floor)
             if lo <= a <= hi]
    rep.add("no atoms on the shrunk interval", not atoms, float(len(atoms)),
            atoms[0] if atoms else None)
    return rep, st


def perturbed_state(base, model, eps, interval):
    """Base data with rho0 = sigma0 = eps on the interval.

    u_t is rescaled on the interval so that the masses of mu and nu on it are
    the base ones (equal cumulative masses at both ends).  Needs base data
    with u_x = 0 on the interval, so that R = S = u_t there.
    """
    g = base.grid
    xl, xr = interval
    inside = (g >= xl) & (g <= xr)
    c = model.c(base.u)
    if np.any(np.abs(base.R[inside] - base.S[inside]) > 1e-12 * (1 + np.abs(base.R).max())):
        raise HypothesisError("approximation study needs u_x = 0 on the interval")
    if eps == 0:
        return base
    ut = 0.5 * (base.R + base.S)
    mask = inside.astype(float)
    rho = eps * mask
    kin = float(np.trapezoid(mask * ut * ut, g))
    extra = float(np.trapezoid(mask * c * eps * eps, g))
    if extra >= kin:
        raise HypothesisError(f"eps = {eps:g} carries more energy than the base data on the interval")
    lam = np.sqrt((kin - extra) / kin)
    ut_new = np.where(inside, lam * ut, ut)
    ux = (base.R - base.S) / (2 * c)
    return from_primitives(g, base.u, ut_new, ux, rho, rho, model,
                           atoms_mu=base.mu.atoms, atoms_nu=base.nu.atoms, check=False)


def approximation_study(base, model, epsilons, tau, interval, params=None, mapper=None):
    """Table of sup |u_eps(tau) - u(tau)| and ||rho_eps(tau)||_L1 on the shrunk
    interval; both columns are expected to decrease as eps decreases."""
    lo, hi = shrunk_interval(interval, model, tau)
    ref = evolve_many(base, [tau], model, params)[0].state
    probe = np.linspace(lo, hi, 401)
    u_ref = np.interp(probe, ref.grid, ref.u)

    def one(eps):
        st0 = perturbed_state(base, model, float(eps), interval)
        st = evolve_many(st0, [tau], model, params)[0].state
        du = float(np.max(np.abs(np.interp(probe, st.grid, st.u) - u_ref)))
        keep = (st.grid >= lo) & (st.grid <= hi)
        l1 = float(np.trapezoid(np.abs(st.rho[keep]), st.grid[keep])) if keep.sum() > 1 else 0.0
        return {"eps": float(eps), "u_sup_diff": du, "rho_L1": l1}

    rows = list((mapper or map)(one, epsilons))
    order = sorted(rows, key=lambda r: -r["eps"])
    du_col = [r["u_sup_diff"] for r in order]
    l1_col = [r["rho_L1"] for r in order]
    rep = Report(f"approximation at tau={tau:g} on [{lo:g}, {hi:g}]")
    rep.add("sup |u_eps - u| strictly decreasing", all(b < a for a, b in zip(du_col, du_col[1:])),
            max(du_col, default=0.0))
    rep.add("||rho_eps||_L1 strictly decreasing", all(b < a for a, b in zip(l1_col, l1_col[1:])),
            max(l1_col, default=0.0))
    rates = []
    for a, b in zip(order, order[1:]):
        if a["u_sup_diff"] > 0 and b["u_sup_diff"] > 0 and b["eps"] > 0:
            rates.append(float(np.log(a["u_sup_diff"] / b["u_sup_diff"]) / np.log(a["eps"] / b["eps"])))
    return {"rows": order, "observed_u_rates": rates, "report": rep.to_dict()}, rep


# ---------------------------------------------------------------- output

def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (RadonMeasure, EulerianState)):
        raise TypeError("serialise states with their own writers")
    return obj


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_plain(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")

"""Eulerian data (u, R, S, rho, sigma, mu, nu) and energy accounting."""

from dataclasses import dataclass, replace

import numpy as np

from .measures import RadonMeasure
from .quadrature import cell_masses
from .report import Report


class CompatibilityError(ValueError):
    pass


@dataclass(frozen=True)
class EulerianState:
    grid: np.ndarray
    u: np.ndarray
    R: np.ndarray
    S: np.ndarray
    rho: np.ndarray
    sigma: np.ndarray
    mu: RadonMeasure
    nu: RadonMeasure

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        object.__setattr__(self, "grid", grid)
        for name in ("u", "R", "S", "rho", "sigma"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != grid.shape:
                raise ValueError(f"field {name} has shape {arr.shape}, grid has {grid.shape}")
            object.__setattr__(self, name, arr)

    @property
    def h(self):
        return float(np.max(np.diff(self.grid))) if self.grid.size > 1 else 0.0

    def total_energy(self):
        return total_energy(self)

    def sample(self, x):
        """Linear interpolation of the fields at ``x`` (zero / constant outside)."""
        g = self.grid
        return {
            "u": np.interp(x, g, self.u),
            "R": np.interp(x, g, self.R, left=0.0, right=0.0),
            "S": np.interp(x, g, self.S, left=0.0, right=0.0),
            "rho": np.interp(x, g, self.rho, left=0.0, right=0.0),
            "sigma": np.interp(x, g, self.sigma, left=0.0, right=0.0),
        }


def total_energy(state):
    return state.mu.total + state.nu.total


def energy_densities(grid, u, R, S, rho, sigma, model):
    c = model.c(u)
    return 0.25 * (R * R + c * rho * rho), 0.25 * (S * S + c * sigma * sigma)


def derivative(grid, f):
    """Second-order three-point derivative on a possibly non-uniform grid."""
    x = np.asarray(grid, dtype=float)
    f = np.asarray(f, dtype=float)
    if x.size < 3:
        return np.gradient(f, x) if x.size == 2 else np.zeros_like(f)
    return np.gradient(f, x, edge_order=2)


def compatibility_residual(grid, u, u_x):
    """max |u_x - D u| and the grid index where it occurs."""
    r = np.abs(np.asarray(u_x) - derivative(grid, u))
    k = int(np.argmax(r)) if r.size else 0
    return (float(r[k]) if r.size else 0.0), k


def _measure(grid, density, atoms, cumulative):
    if cumulative is None:
        m = RadonMeasure(grid, density, cell_masses=cell_masses(grid, density))
    else:
        cum = np.asarray(cumulative(grid) if callable(cumulative) else cumulative, dtype=float)
        m = RadonMeasure(grid, density, left_tail_mass=float(cum[0]),
                         cell_masses=np.maximum(np.diff(cum), 0.0))
    return m.with_atoms(atoms) if atoms else m


def from_primitives(grid, u, u_t, u_x, rho, sigma, model, atoms_mu=(), atoms_nu=(),
                    mu_cumulative=None, nu_cumulative=None, check=True):
    """Build a state from u, u_t, u_x, rho, sigma samples.

    R = u_t + c(u) u_x and S = u_t - c(u) u_x.  The absolutely continuous parts
    of mu and nu get densities (R^2 + c rho^2)/4 and (S^2 + c sigma^2)/4.  An
    optional ``*_cumulative`` (callable or node values of the ac cumulative,
    tails included) fixes exact interval masses; otherwise cell masses come
    from the fourth-order rule in :mod:`quadrature`.  Atom positions are inserted
    into the grid so every atom sits on a node.
    """
    grid = np.asarray(grid, dtype=float)
    fields = [np.broadcast_to(np.asarray(a, dtype=float), grid.shape).astype(float)
              for a in (u, u_t, u_x, rho, sigma)]
    u, u_t, u_x, rho, sigma = fields
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing with at least two points")
    if check and grid.size >= 3:
        h = float(np.max(np.diff(grid)))
        res, k = compatibility_residual(grid, u, u_x)
        scale = max(float(np.max(np.abs(u_x))), 1e-300)
        if res > 10.0 * h * h * scale:
            raise CompatibilityError(
                f"u_x inconsistent with u: worst residual {res:.3e} at x={grid[k]:.6g} "
                f"(index {k}), allowed {10.0 * h * h * scale:.3e}")
    c = model.c(u)
    R = u_t + c * u_x
    S = u_t - c * u_x
    atoms_mu = [(float(a), float(m)) for a, m in atoms_mu]
    atoms_nu = [(float(a), float(m)) for a, m in atoms_nu]
    extra = [a for a, _ in atoms_mu + atoms_nu if not np.any(grid == a)]
    if extra:
        new = np.unique(np.concatenate([grid, extra]))
        cols = [np.interp(new, grid, f) for f in (u, R, S, rho, sigma)]
        if mu_cumulative is not None and not callable(mu_cumulative):
            mu_cumulative = np.interp(new, grid, mu_cumulative)
        if nu_cumulative is not None and not callable(nu_cumulative):
            nu_cumulative = np.interp(new, grid, nu_cumulative)
        grid = new
        u, R, S, rho, sigma = cols
        c = model.c(u)
    dmu, dnu = energy_densities(grid, u, R, S, rho, sigma, model)
    mu = _measure(grid, dmu, atoms_mu, mu_cumulative)
    nu = _measure(grid, dnu, atoms_nu, nu_cumulative)
    return EulerianState(grid, u, R, S, rho, sigma, mu, nu)


def zero_state(grid, u0=0.0):
    grid = np.asarray(grid, dtype=float)
    z = np.zeros_like(grid)
    return EulerianState(grid, z + u0, z, z, z, z, RadonMeasure.zero(grid), RadonMeasure.zero(grid))


def validate(state, model, compat_factor=10.0, density_rtol=1e-10):
    rep = Report("eulerian state")
    g = state.grid
    dx = np.diff(g)
    l2 = {}
    for name in ("u", "R", "S", "rho", "sigma"):
        f = getattr(state, name)
        l2[name] = float(np.sqrt(np.sum(0.5 * (f[1:] ** 2 + f[:-1] ** 2) * dx)))
    rep.add("finite L2 norms", all(np.isfinite(v) for v in l2.values()),
            max(l2.values()) if l2 else 0.0)

    c = model.c(state.u)
    if g.size >= 3:
        u_x = (state.R - state.S) / (2.0 * c)
        res, k = compatibility_residual(g, state.u, u_x)
        h = float(np.max(dx))
        scale = max(float(np.max(np.abs(u_x))), 1e-300)
        rep.add("u_x = (R-S)/(2c(u))", res <= compat_factor * h * h * scale or res < 1e-14,
                res, float(g[k]))

    dmu, dnu = energy_densities(g, state.u, state.R, state.S, state.rho, state.sigma, model)
    for label, meas, dens in (("mu", state.mu, dmu), ("nu", state.nu, dnu)):
        got = meas.density_at(g)
        err = np.abs(got - dens)
        scale = max(float(np.max(np.abs(dens))), 1e-300)
        k = int(np.argmax(err))
        rep.add(f"{label} density = energy density", err[k] <= density_rtol * scale or err[k] < 1e-300,
                float(err[k] / scale), float(g[k]))
        rep.add(f"{label} atoms nonnegative", bool(np.all(meas.atom_masses >= 0)),
                float(-min(0.0, meas.atom_masses.min())) if meas.atom_masses.size else 0.0)
    return rep


def extend(state, margin):
    """Pad the grid on both sides by at least ``margin`` with trivial data.

    New nodes keep the end spacing; u is held constant, the other fields and
    the new cells of mu and nu carry nothing.
    """
    g = state.grid
    if margin <= 0:
        return state
    hl = g[1] - g[0]
    hr = g[-1] - g[-2]
    nl = int(np.ceil(margin / hl))
    nr = int(np.ceil(margin / hr))
    left = g[0] - hl * np.arange(nl, 0, -1)
    right = g[-1] + hr * np.arange(1, nr + 1)
    grid = np.concatenate([left, g, right])
    zl, zr = np.zeros(nl), np.zeros(nr)

    def pad(f, lv, rv):
        return np.concatenate([zl + lv, f, zr + rv])

    def pad_measure(m):
        if not np.array_equal(m.grid, g):
            m = m.resample(g)
        return RadonMeasure(grid, pad(m.density, 0.0, 0.0), m.atom_positions, m.atom_masses,
                            m.left_tail_mass, np.concatenate([zl, m.cell_masses, zr]))

    return EulerianState(grid, pad(state.u, state.u[0], state.u[-1]),
                         pad(state.R, 0, 0), pad(state.S, 0, 0), pad(state.rho, 0, 0),
                         pad(state.sigma, 0, 0), pad_measure(state.mu), pad_measure(state.nu))


def restrict(state, lo, hi):
    """Samples on [lo, hi] (measures keep their full support)."""
    keep = (state.grid >= lo) & (state.grid <= hi)
    return replace(state, grid=state.grid[keep], u=state.u[keep], R=state.R[keep],
                   S=state.S[keep], rho=state.rho[keep], sigma=state.sigma[keep])

"""Finite positive measures on the line and monotone piecewise-linear maps.

Cumulative values always use the open interval (-inf, x): an atom at ``a``
counts towards ``cumulative(x)`` only for ``x > a``.
"""

from dataclasses import dataclass, field

import numpy as np


class MeasureError(ValueError):
    pass


def flat_tolerance(values):
    return 1e-13 * (1.0 + np.abs(values))


@dataclass(frozen=True)
class RadonMeasure:
    """Piecewise-linear density on ``grid`` plus atoms.

    ``cell_masses`` holds the exact mass of every grid interval.  When omitted
    it is the trapezoid integral of the density; supplying it lets a measure
    carry exact interval masses (e.g. from a known cumulative) while the
    density stays a pointwise value.
    """

    grid: np.ndarray
    density: np.ndarray
    atom_positions: np.ndarray = field(default_factory=lambda: np.zeros(0))
    atom_masses: np.ndarray = field(default_factory=lambda: np.zeros(0))
    left_tail_mass: float = 0.0
    cell_masses: np.ndarray = None

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        dens = np.asarray(self.density, dtype=float)
        if grid.ndim != 1 or dens.shape != grid.shape:
            raise MeasureError("grid and density must be 1-D arrays of equal length")
        if grid.size >= 2 and np.any(np.diff(grid) <= 0):
            raise MeasureError("measure grid must be strictly increasing")
        if np.any(dens < 0):
            raise MeasureError("density must be nonnegative")
        pos = np.atleast_1d(np.asarray(self.atom_positions, dtype=float))
        mass = np.atleast_1d(np.asarray(self.atom_masses, dtype=float))
        if pos.shape != mass.shape:
            raise MeasureError("atom positions and masses differ in length")
        if np.any(mass <= 0):
            raise MeasureError("atom masses must be positive")
        if pos.size >= 2 and np.any(np.diff(pos) <= 0):
            raise MeasureError("atom positions must be strictly increasing")
        if self.left_tail_mass < 0:
            raise MeasureError("left tail mass must be nonnegative")
        if self.cell_masses is None:
            cells = 0.5 * (dens[1:] + dens[:-1]) * np.diff(grid)
        else:
            cells = np.asarray(self.cell_masses, dtype=float)
            if cells.shape != (max(grid.size - 1, 0),):
                raise MeasureError("cell_masses must have one entry per grid interval")
            if np.any(cells < 0):
                raise MeasureError("cell masses must be nonnegative")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "density", dens)
        object.__setattr__(self, "atom_positions", pos)
        object.__setattr__(self, "atom_masses", mass)
        object.__setattr__(self, "left_tail_mass", float(self.left_tail_mass))
        object.__setattr__(self, "cell_masses", cells)
        object.__setattr__(self, "_cum_nodes", np.concatenate([[0.0], np.cumsum(cells)]))
        object.__setattr__(self, "_cum_atoms", np.concatenate([[0.0], np.cumsum(mass)]))

    @classmethod
    def zero(cls, grid):
        grid = np.asarray(grid, dtype=float)
        return cls(grid, np.zeros_like(grid))

    @classmethod
    def from_atoms(cls, grid, atoms):
        grid = np.asarray(grid, dtype=float)
        atoms = sorted((float(a), float(m)) for a, m in atoms)
        return cls(grid, np.zeros_like(grid),
                   [a for a, _ in atoms], [m for _, m in atoms])

    @property
    def atoms(self):
        return list(zip(self.atom_positions.tolist(), self.atom_masses.tolist()))

    @property
    def absolutely_continuous_mass(self):
        return self.left_tail_mass + float(self._cum_nodes[-1])

    @property
    def total(self):
        return self.absolutely_continuous_mass + float(self._cum_atoms[-1])

    def with_atoms(self, atoms):
        merged = dict(self.atoms)
        for a, m in atoms:
            merged[float(a)] = merged.get(float(a), 0.0) + float(m)
        items = sorted(merged.items())
        return RadonMeasure(self.grid, self.density, [a for a, _ in items],
                            [m for _, m in items], self.left_tail_mass, self.cell_masses)

    def _ac_cumulative(self, x):
        g = self.grid
        out = np.full(x.shape, self.left_tail_mass)
        if g.size == 0:
            return out
        right = x >= g[-1]
        out[right] += self._cum_nodes[-1]
        inside = (x > g[0]) & ~right
        if np.any(inside):
            xi = x[inside]
            k = np.searchsorted(g, xi, side="right") - 1
            w = g[k + 1] - g[k]
            theta = (xi - g[k]) / w
            d0, d1 = self.density[k], self.density[k + 1]
            trap = 0.5 * (d0 + d1)
            shape = d0 * theta + 0.5 * (d1 - d0) * theta * theta
            frac = np.where(trap > 0, shape / np.where(trap > 0, trap, 1.0), theta)
            out[inside] += self._cum_nodes[k] + self.cell_masses[k] * frac
        return out

    def cumulative(self, x):
        """mu((-inf, x)), vectorised."""
        xa = np.asarray(x, dtype=float)
        flat = np.atleast_1d(xa).ravel()
        out = self._ac_cumulative(flat)
        if self.atom_positions.size:
            n_left = np.searchsorted(self.atom_positions, flat, side="left")
            out = out + self._cum_atoms[n_left]
        out = out.reshape(np.shape(xa))
        return float(out) if out.ndim == 0 else out

    def cumulative_closed(self, x):
        """mu((-inf, x]), the right limit of ``cumulative``."""
        xa = np.asarray(x, dtype=float)
        flat = np.atleast_1d(xa).ravel()
        out = self._ac_cumulative(flat)
        if self.atom_positions.size:
            n_left = np.searchsorted(self.atom_positions, flat, side="right")
            out = out + self._cum_atoms[n_left]
        out = out.reshape(np.shape(xa))
        return float(out) if out.ndim == 0 else out

    def density_at(self, x):
        if self.grid.size == 0:
            return np.zeros_like(np.asarray(x, dtype=float))
        return np.interp(x, self.grid, self.density, left=0.0, right=0.0)

    def resample(self, grid, density=None):
        """Same measure on a new grid (cell masses from cumulative differences)."""
        grid = np.asarray(grid, dtype=float)
        ac = self._ac_cumulative(grid)
        cells = np.maximum(np.diff(ac), 0.0)
        if density is None:
            density = self.density_at(grid)
        return RadonMeasure(grid, density, self.atom_positions, self.atom_masses,
                            float(ac[0]), cells)

    def to_json(self):
        out = {"density": {"grid": self.grid.tolist(), "values": self.density.tolist()},
               "atoms": [[a, m] for a, m in self.atoms]}
        if self.left_tail_mass:
            out["left_tail_mass"] = self.left_tail_mass
        return out

    @classmethod
    def from_json(cls, obj):
        dens = obj.get("density", {"grid": [], "values": []})
        atoms = sorted((float(a), float(m)) for a, m in obj.get("atoms", []))
        return cls(dens["grid"], dens["values"], [a for a, _ in atoms],
                   [m for _, m in atoms], obj.get("left_tail_mass", 0.0))


@dataclass(frozen=True)
class MonotoneMap:
    """Nondecreasing piecewise-linear map through (inputs, outputs).

    A repeated input with two outputs encodes a jump.  Beyond the samples the
    map continues linearly with ``left_slope`` / ``right_slope``.
    """

    inputs: np.ndarray
    outputs: np.ndarray
    left_slope: float = 1.0
    right_slope: float = 1.0

    def __post_init__(self):
        xi = np.asarray(self.inputs, dtype=float)
        yo = np.asarray(self.outputs, dtype=float)
        if xi.ndim != 1 or xi.shape != yo.shape or xi.size == 0:
            raise MeasureError("monotone map needs matching 1-D samples")
        if np.any(np.diff(xi) < 0) or np.any(np.diff(yo) < 0):
            raise MeasureError("monotone map samples must be nondecreasing")
        object.__setattr__(self, "inputs", xi)
        object.__setattr__(self, "outputs", yo)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        xi, yo = self.inputs, self.outputs
        k = np.clip(np.searchsorted(xi, x, side="right"), 1, max(xi.size - 1, 1))
        if xi.size == 1:
            out = yo[0] + np.where(x < xi[0], self.left_slope, self.right_slope) * (x - xi[0])
        else:
            x0, x1 = xi[k - 1], xi[k]
            y0, y1 = yo[k - 1], yo[k]
            w = x1 - x0
            theta = np.where(w > 0, (x - x0) / np.where(w > 0, w, 1.0), 1.0)
            out = y0 + theta * (y1 - y0)
            out = np.where(x < xi[0], yo[0] + self.left_slope * (x - xi[0]), out)
            out = np.where(x > xi[-1], yo[-1] + self.right_slope * (x - xi[-1]), out)
        return float(out) if out.ndim == 0 else out

    def slopes(self):
        """Exact piecewise-linear slopes of every sample interval (0 on jumps)."""
        dx = np.diff(self.inputs)
        dy = np.diff(self.outputs)
        return np.where(dx > 0, dy / np.where(dx > 0, dx, 1.0), 0.0)

    def inverse(self, y):
        return generalized_inverse(self, y)


def _bisect_sup(f, y, lo, hi):
    # sup{x : f(x) < y} for nondecreasing callable f on a bracket with f(lo) < y <= f(hi)
    tol = 1e-12 * (1.0 + abs(y))
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) < y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def generalized_inverse(f, y, bracket=None):
    """sup{x : f(x) < y} for a nondecreasing ``f``.

    ``f`` is a MonotoneMap (exact piecewise algebra, vectorised over ``y``) or
    a callable, which is bisected inside ``bracket`` (expanded if needed).
    """
    if not isinstance(f, MonotoneMap):
        lo, hi = bracket if bracket is not None else (-1.0, 1.0)
        ys = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.empty_like(ys)
        for n, yv in enumerate(ys):
            a, b = lo, hi
            for _ in range(200):
                if f(a) < yv:
                    break
                a -= 2.0 * (b - a)
            else:
                raise MeasureError(f"level {yv!r} is not above the infimum of f")
            for _ in range(200):
                if f(b) >= yv:
                    break
                b += 2.0 * (b - a)
            else:
                raise MeasureError(f"level {yv!r} is not below the supremum of f")
            out[n] = _bisect_sup(f, yv, a, b)
        return float(out[0]) if np.ndim(y) == 0 else out.reshape(np.shape(y))

    ya = np.asarray(y, dtype=float)
    yv = np.atleast_1d(ya).ravel()
    xi, yo = f.inputs, f.outputs
    out = np.empty_like(yv)
    k = np.searchsorted(yo, yv, side="left")
    below = k == 0
    if np.any(below):
        if f.left_slope <= 0 and np.any(yv[below] <= yo[0]):
            raise MeasureError("level below the infimum of the map")
        out[below] = xi[0] + (yv[below] - yo[0]) / f.left_slope
    above = k == yo.size
    if np.any(above):
        if f.right_slope <= 0:
            raise MeasureError("level above the supremum of the map")
        out[above] = xi[-1] + (yv[above] - yo[-1]) / f.right_slope
    mid = ~below & ~above
    if np.any(mid):
        km = k[mid]
        x0, x1 = xi[km - 1], xi[km]
        y0, y1 = yo[km - 1], yo[km]
        dy = y1 - y0
        theta = np.where(dy > 0, (yv[mid] - y0) / np.where(dy > 0, dy, 1.0), 1.0)
        res = x0 + theta * (x1 - x0)
        # exact sample hits return the sample itself
        res = np.where(yv[mid] == y1, x1, res)
        out[mid] = res
    out = out.reshape(np.shape(ya))
    return float(out) if out.ndim == 0 else out


def push_forward(f, weights=None, cumulative=None, slopes=None):
    """Image measure of ``weights dX`` under the monotone map ``f``.

    ``cumulative`` (values of the integral of the weights at f's inputs, with
    the first entry the mass to the left of the samples) replaces trapezoid
    quadrature when given.  Runs of inputs whose images agree to within the
    flat tolerance become one atom.  Node densities are weights / f' where
    ``slopes`` (f' at the inputs) is positive, else the neighbouring cell
    average.
    """
    xi, yo = f.inputs, f.outputs
    if weights is not None:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != xi.shape:
            raise MeasureError("push-forward weights need one value per map sample")
        if np.any(weights < 0):
            raise MeasureError("push-forward weights must be nonnegative")
    if cumulative is None:
        if weights is None:
            raise MeasureError("push_forward needs weights or a cumulative")
        seg = 0.5 * (weights[1:] + weights[:-1]) * np.diff(xi)
        base = 0.0
    else:
        cumulative = np.asarray(cumulative, dtype=float)
        seg = np.maximum(np.diff(cumulative), 0.0)
        base = float(cumulative[0])

    # group consecutive images that coincide
    new_node = np.ones(yo.size, dtype=bool)
    new_node[1:] = (yo[1:] - yo[:-1]) > flat_tolerance(yo[1:])
    group = np.cumsum(new_node) - 1
    grid = yo[new_node]
    n = grid.size
    atom_mass = np.zeros(n)
    if seg.size:
        same = group[1:] == group[:-1]
        np.add.at(atom_mass, group[1:][same], seg[same])
        cells = np.zeros(max(n - 1, 0))
        np.add.at(cells, group[:-1][~same], seg[~same])
    else:
        cells = np.zeros(max(n - 1, 0))

    first = np.flatnonzero(new_node)
    dens = np.zeros(n)
    widths = np.diff(grid)
    avg = np.where(widths > 0, cells / np.where(widths > 0, widths, 1.0), 0.0)
    fallback = np.zeros(n)
    if n > 1:
        fallback[0] = avg[0]
        fallback[-1] = avg[-1]
        fallback[1:-1] = 0.5 * (avg[1:] + avg[:-1])
    if slopes is not None and weights is not None:
        s = np.asarray(slopes, dtype=float)[first]
        w = weights[first]
        dens = np.where(s > 0, w / np.where(s > 0, s, 1.0), fallback)
    else:
        dens = fallback
    keep = atom_mass > 0
    return RadonMeasure(grid, np.maximum(dens, 0.0), grid[keep], atom_mass[keep], base, cells)

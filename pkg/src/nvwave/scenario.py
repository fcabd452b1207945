"""Scenario files: JSON describing a wave speed, initial data on an interval,
solver settings and the task to run.

Schema (keys not listed are rejected)::

    {
      "name": "smooth_bump",
      "description": "free text",
      "task": "solve" | "verify" | "conservation" | "convergence"
              | "regularization" | "approximation",   (default task, default verify)
      "wavespeed": {"kind": "builtin-smooth", "params": [1, 1]},
      "domain": [x_l, x_r],
      "grid": 256,                       # number of cells
      "initial": {
        "u": expr | number | [samples],  # required
        "u_t", "u_x", "rho", "sigma": expr | number | [samples]   (default 0;
                                         u_x defaults to the discrete derivative of u)
        "atoms_mu", "atoms_nu": [[x, mass], ...],
        "mu_cumulative", "nu_cumulative": expr   (exact ac cumulative incl. left tail)
      },
      "solver": {"tol", "max_iter", "cell_size", "cell_budget", "quad", "n_atom", "thin"},
      "times": [T, ...],
      "checks": {...},                   # task-specific expectations, see cli
      "interval": [a, b], "tau": t, "epsilons": [...], "levels": K
    }

Expressions use the grammar in :mod:`expr`.
"""

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .eulerian import derivative, from_primitives
from .evolution import SolverParams
from .expr import ExpressionError, evaluate
from .wavespeed import ConfigurationError, from_config

TASKS = ("solve", "verify", "conservation", "convergence", "regularization", "approximation")
_TOP = {"name", "description", "task", "wavespeed", "domain", "grid", "initial", "solver",
        "times", "checks", "interval", "tau", "epsilons", "levels"}
_INITIAL = {"u", "u_t", "u_x", "rho", "sigma", "atoms_mu", "atoms_nu", "mu_cumulative",
            "nu_cumulative"}


class ScenarioError(ValueError):
    pass


@dataclass
class Scenario:
    name: str
    task: str
    model: object
    domain: tuple
    grid: int
    initial: dict
    solver: SolverParams
    times: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    interval: tuple = None
    tau: float = None
    epsilons: list = field(default_factory=list)
    levels: int = 3
    description: str = ""

    def nodes(self, n=None):
        n = int(n or self.grid)
        return np.linspace(self.domain[0], self.domain[1], n + 1)

    def state(self, n=None):
        """Initial EulerianState on an n-cell uniform grid (default: ``grid``)."""
        x = self.nodes(n)
        ini = self.initial
        vals = {k: _field(ini.get(k, 0.0), x, k) for k in ("u", "u_t", "rho", "sigma")}
        ux = _field(ini["u_x"], x, "u_x") if "u_x" in ini else derivative(x, vals["u"])
        cums = {}
        for k in ("mu_cumulative", "nu_cumulative"):
            if k in ini:
                text = ini[k]
                cums[k] = lambda y, text=text: evaluate(text, y)
        return from_primitives(x, vals["u"], vals["u_t"], ux, vals["rho"], vals["sigma"],
                               self.model, atoms_mu=ini.get("atoms_mu", ()),
                               atoms_nu=ini.get("atoms_nu", ()), **cums)

    def to_dict(self):
        return {"name": self.name, "task": self.task, "wavespeed": self.model.to_config(),
                "domain": list(self.domain), "grid": self.grid, "initial": self.initial,
                "solver": vars(self.solver), "times": self.times, "checks": self.checks,
                "interval": list(self.interval) if self.interval else None, "tau": self.tau,
                "epsilons": self.epsilons, "levels": self.levels,
                "description": self.description}


def _field(value, x, name):
    if isinstance(value, (int, float)):
        return np.full_like(x, float(value))
    if isinstance(value, str):
        return evaluate(value, x)
    if isinstance(value, list):
        arr = np.asarray(value, dtype=float)
        if arr.shape != x.shape:
            raise ScenarioError(f"initial.{name} has {arr.size} samples, grid has {x.size}")
        return arr
    raise ScenarioError(f"initial.{name} must be a number, an expression or a sample list")


def _positive(obj, key, kind=float):
    try:
        v = kind(obj[key])
    except (TypeError, ValueError):
        raise ScenarioError(f"{key} must be a positive number") from None
    if not v > 0:
        raise ScenarioError(f"{key} must be positive, got {v}")
    return v


def parse(obj):
    """Validate a decoded scenario and return a Scenario."""
    if not isinstance(obj, dict):
        raise ScenarioError("scenario must be a JSON object")
    unknown = set(obj) - _TOP
    if unknown:
        raise ScenarioError(f"unknown scenario keys: {sorted(unknown)}")
    for key in ("name", "wavespeed", "domain", "grid", "initial"):
        if key not in obj:
            raise ScenarioError(f"missing scenario key {key!r}")
    task = obj.get("task", "verify")
    if task not in TASKS:
        raise ScenarioError(f"task must be one of {TASKS}, got {task!r}")
    try:
        model = from_config(obj["wavespeed"])
    except ConfigurationError as exc:
        raise ScenarioError(f"wavespeed: {exc}") from None
    dom = obj["domain"]
    if not (isinstance(dom, list) and len(dom) == 2 and float(dom[0]) < float(dom[1])):
        raise ScenarioError("domain must be [x_l, x_r] with x_l < x_r")
    grid = _positive(obj, "grid", int)
    if grid < 4:
        raise ScenarioError("grid needs at least 4 cells")
    ini = obj["initial"]
    if not isinstance(ini, dict) or "u" not in ini:
        raise ScenarioError("initial must be an object with at least 'u'")
    bad = set(ini) - _INITIAL
    if bad:
        raise ScenarioError(f"unknown initial keys: {sorted(bad)}")
    for k in ("atoms_mu", "atoms_nu"):
        atoms = ini.get(k, [])
        if not isinstance(atoms, list) or any(
                not (isinstance(a, list) and len(a) == 2) for a in atoms):
            raise ScenarioError(f"initial.{k} must be a list of [x, mass] pairs")
        if any(float(m) < 0 for _, m in atoms):
            raise ScenarioError(f"initial.{k} has a negative mass")
    solver_cfg = obj.get("solver", {})
    if not isinstance(solver_cfg, dict) or set(solver_cfg) - set(SolverParams.__dataclass_fields__):
        raise ScenarioError(f"solver keys must be among {sorted(SolverParams.__dataclass_fields__)}")
    solver = SolverParams.from_config(solver_cfg)
    for key in ("tol", "max_iter", "cell_size", "cell_budget", "n_atom", "thin"):
        _positive(vars(solver), key)
    if solver.quad not in ("trapezoid", "cubic"):
        raise ScenarioError("solver.quad must be 'trapezoid' or 'cubic'")
    times = [float(t) for t in obj.get("times", [])]
    interval = obj.get("interval")
    if interval is not None:
        if not (isinstance(interval, list) and len(interval) == 2 and interval[0] < interval[1]):
            raise ScenarioError("interval must be [a, b] with a < b")
        interval = (float(interval[0]), float(interval[1]))
    scn = Scenario(str(obj["name"]), task, model, (float(dom[0]), float(dom[1])), grid, ini,
                   solver, times, dict(obj.get("checks", {})), interval,
                   None if obj.get("tau") is None else float(obj["tau"]),
                   [float(e) for e in obj.get("epsilons", [])], int(obj.get("levels", 3)),
                   str(obj.get("description", "")))
    if task in ("regularization", "approximation") and (scn.interval is None or scn.tau is None):
        raise ScenarioError(f"task {task} needs 'interval' and 'tau'")
    if task == "approximation" and not scn.epsilons:
        raise ScenarioError("task approximation needs 'epsilons'")
    # evaluate every expression once so bad input fails at parse time
    try:
        scn.state()
    except (ExpressionError, ValueError) as exc:
        raise ScenarioError(f"initial data: {exc}") from None
    return scn


def load(path):
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror}") from None
    return parse(obj)


def _bundle():
    return resources.files("nvwave") / "scenarios"


def list_scenarios():
    return sorted(p.name[:-5] for p in _bundle().iterdir() if p.name.endswith(".json"))


def bundled_path(name):
    p = _bundle() / f"{name}.json"
    if not p.is_file():
        raise ScenarioError(f"no bundled scenario {name!r}; have {list_scenarios()}")
    return str(p)


def bundled(name):
    return load(bundled_path(name))

"""Command line: ``nvw <task> --scenario FILE --out DIR [options]``.

Exit codes: 0 all asserted checks pass, 1 a check failed, 2 the scenario could
not be parsed (or violates a task's hypotheses), 3 the solver failed.  Every
non-zero exit also writes ``error.json`` into the output directory.
NVW_THREADS caps the number of worker threads used for independent runs.
"""

import argparse
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from . import closedform
from .diagnostics import (HypothesisError, NotApplicable, approximation_study,
                          conservation_series, h_convergence, oracle_convergence,
                          regularization_check, significant_atoms, write_json)
from .eulerian import CompatibilityError, validate
from .evolution import (CoverageError, evolve_many, map_M, write_atoms_csv,
                        write_slice_csv)
from .expr import ExpressionError
from .goursat import NonContraction, ResourceError, SolverError, TilingError
from .lagrangian import InvariantError, check_F, check_G, dump_csv, map_C, map_L
from .measures import MeasureError
from .report import Report
from .scenario import ScenarioError, TASKS, bundled_path, list_scenarios, load
from .wavespeed import ConfigurationError

EXIT_OK, EXIT_INVARIANT, EXIT_PARSE, EXIT_SOLVER = 0, 1, 2, 3


def threads():
    try:
        return max(1, int(os.environ.get("NVW_THREADS", "1")))
    except ValueError:
        return 1


def pmap(fn, items):
    """map in input order, on up to NVW_THREADS threads."""
    items = list(items)
    n = min(threads(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------- shared checks

def round_trip_report(state, model, psi=None, probes=200):
    """M(L(state)) against state: node values to 50 h^2, cumulatives to 1e-8."""
    psi = psi or map_L(state, model)
    back = map_M(psi, model)
    h = state.h
    rep = Report("round trip M(L(state))")
    g = state.grid
    for name in ("u", "R", "S", "rho", "sigma"):
        err = float(np.max(np.abs(np.interp(g, back.grid, getattr(back, name)) - getattr(state, name))))
        rep.add(f"{name} reproduced", err <= 50 * h * h, err, detail=f"allowed {50 * h * h:.3e}")
    x = np.linspace(g[0], g[-1], probes)
    for name in ("mu", "nu"):
        a, b = getattr(state, name), getattr(back, name)
        err = float(np.max(np.abs(a.cumulative(x) - b.cumulative(x))))
        rep.add(f"{name} cumulative", err <= 1e-8, err)
    return rep


# ---------------------------------------------------------------- tasks

def _slices(scn, times):
    ts = sorted(set([0.0] + list(times)))
    return evolve_many(scn.state(), ts, scn.model, scn.solver)


def task_solve(scn, out, args):
    st = scn.state()
    if args.dump_lagrangian:
        dump_csv(map_L(st, scn.model, scn.solver.n_atom), os.path.join(out, "lagrangian.csv"))
    slices = _slices(scn, scn.times)
    E0 = st.total_energy()
    rows = []
    for k, s in enumerate(slices):
        write_slice_csv(os.path.join(out, f"slice_{k:03d}.csv"), s.T, s.state, scn.model)
        rows.append({"t": s.T, "energy": s.state.total_energy(), "nodes": int(s.state.grid.size)})
    write_atoms_csv(os.path.join(out, "atoms.csv"), [(s.T, s.state) for s in slices])
    rep = Report(f"solve {scn.name}")
    drift = max(abs(r["energy"] - E0) for r in rows) / max(E0, 1e-300)
    allowed = scn.checks.get("drift", 1e-6)
    rep.add("energy conserved", drift <= allowed or (E0 == 0 and drift == 0), drift,
            detail=f"allowed {allowed:g}")
    if scn.checks.get("zero"):
        worst = max(float(np.max(np.abs(s.state.u))) + s.state.total_energy() for s in slices)
        rep.add("zero data stays zero", worst <= 1e-12, worst)
    return rep, {"slices": rows}


def _curve_checks(scn, rep, psi, curve):
    shape = scn.checks.get("curve")
    if shape:
        err, at = closedform.curve_error(curve, psi, shape)
        rep.add(f"initial curve matches the {shape} closed form", err <= 1e-10, err, at)


def _atom_checks(scn, rep, slices):
    tol = scn.checks.get("atom_tol", 1e-4)
    by_t = {s.T: s.state for s in slices}
    for t, which, x, mass in scn.checks.get("atoms", []):
        st = by_t.get(float(t))
        if st is None:
            rep.add(f"atom of {which} at t={t:g}", False, detail="time not computed")
            continue
        atoms = significant_atoms(getattr(st, which), st.total_energy())
        best = min(atoms, key=lambda a: abs(a[0] - x), default=None)
        err = float("inf") if best is None else abs(best[0] - x) + abs(best[1] - mass)
        rep.add(f"atom of {which} at t={t:g}: x={x:g}, mass={mass:g}", err <= tol, err,
                None if best is None else best[0])


def task_verify(scn, out, args):
    model = scn.model
    st = scn.state()
    reports = [validate(st, model)]
    psi = map_L(st, model, scn.solver.n_atom)
    if args.dump_lagrangian:
        dump_csv(psi, os.path.join(out, "lagrangian.csv"))
    reports.append(check_F(psi, model))
    curve = map_C(psi, model)
    reports.append(check_G(curve, model, psi=psi))
    shape_rep = Report("closed forms")
    _curve_checks(scn, shape_rep, psi, curve)
    if shape_rep.checks:
        reports.append(shape_rep)
    if scn.checks.get("round_trip", True):
        reports.append(round_trip_report(st, model, psi))
    extra = {}
    if scn.times:
        slices = _slices(scn, scn.times)
        E0 = st.total_energy()
        ev = Report("evolution")
        drift = max(abs(s.state.total_energy() - E0) for s in slices) / max(E0, 1e-300)
        allowed = scn.checks.get("drift", 1e-6)
        ev.add("energy conserved", drift <= allowed or E0 == 0, drift, detail=f"allowed {allowed:g}")
        if scn.checks.get("zero"):
            worst = max(float(np.max(np.abs(s.state.u))) + s.state.total_energy() for s in slices)
            ev.add("zero data stays zero", worst <= 1e-12, worst)
        _atom_checks(scn, ev, slices)
        reports.append(ev)
        extra["atoms"] = {repr(s.T): {"mu": s.state.mu.atoms, "nu": s.state.nu.atoms} for s in slices}
        write_atoms_csv(os.path.join(out, "atoms.csv"), [(s.T, s.state) for s in slices])
    if "h_rtol" in scn.checks:
        res = h_convergence(scn, 1, mapper=pmap)[0]
        hr = Report("H relations on the initial rectangle")
        for k, v in res["residuals"].items():
            hr.add(k, v <= scn.checks["h_rtol"], v)
        reports.append(hr)
    merged = Report(f"verify {scn.name}")
    for r in reports:
        for c in r.checks:
            merged.checks.append(replace(c, name=f"{r.title}: {c.name}"))
    return merged, extra


def task_conservation(scn, out, args):
    times = scn.times or [0.1, 0.2, 0.3, 0.4, 0.5]
    cr = conservation_series(scn.state(), times, scn.model, scn.solver)
    cr.write_csv(os.path.join(out, "conservation.csv"))
    allowed = scn.checks.get("drift", 1e-6)
    rep = Report(f"conservation {scn.name}")
    rep.add("relative energy drift", cr.drift <= allowed, cr.drift, detail=f"allowed {allowed:g}")
    return rep, {"series": cr.to_dict()}


def task_convergence(scn, out, args):
    levels = args.levels or scn.levels
    rows = h_convergence(scn, levels, mapper=pmap)
    rep = Report(f"convergence {scn.name}")
    for a, b in zip(rows, rows[1:]):
        ratio = a["worst"] / b["worst"] if b["worst"] > 0 else float("inf")
        a_to_b = f"{a['grid']} -> {b['grid']}"
        b["ratio"] = ratio
        rep.add(f"H residual ratio {a_to_b}", ratio >= 3.0, ratio)
    extra = {"h_relations": rows}
    st = scn.state()
    smooth = not (st.mu.atoms or st.nu.atoms)
    T = scn.checks.get("oracle_time", 0.2)
    if smooth:
        orc = oracle_convergence(scn, T, levels, mapper=pmap)
        extra["oracle"] = {"time": T, "rows": orc}
        for r in orc[1:]:
            rep.add(f"order vs finite differences at grid {r['grid']}",
                    r["observed_order"] >= 1.5, r["observed_order"])
    return rep, extra


def task_regularization(scn, out, args):
    rep, st = regularization_check(scn.state(), scn.model, scn.tau, scn.interval, scn.solver)
    write_slice_csv(os.path.join(out, "slice_tau.csv"), scn.tau, st, scn.model)
    return rep, {}


def task_approximation(scn, out, args):
    table, rep = approximation_study(scn.state(), scn.model, scn.epsilons, scn.tau,
                                     scn.interval, scn.solver, mapper=pmap)
    return rep, {"table": table}


TASK_FUNCS = {"solve": task_solve, "verify": task_verify, "conservation": task_conservation,
              "convergence": task_convergence, "regularization": task_regularization,
              "approximation": task_approximation}


# ---------------------------------------------------------------- driver

def _fail(out, code, task, exc):
    record = {"exit_code": code, "task": task, "error": type(exc).__name__, "message": str(exc)}
    for attr in ("cell", "history"):
        val = getattr(exc, attr, None)
        if val is not None:
            record[attr] = val
    if out:
        try:
            os.makedirs(out, exist_ok=True)
            write_json(os.path.join(out, "error.json"), record)
        except OSError:
            pass
    print(f"nvw {task}: {type(exc).__name__}: {exc}", file=sys.stderr)
    return code


def _resolve(path):
    if os.path.exists(path):
        return path
    if path in list_scenarios():
        return bundled_path(path)
    return path


def build_parser():
    ap = argparse.ArgumentParser(prog="nvw", description="Conservative solutions of the "
                                 "regularized nonlinear variational wave system.")
    ap.add_argument("task", choices=TASKS + ("list",))
    ap.add_argument("--scenario", help="scenario JSON file or bundled scenario name")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--tol", type=float, help="Picard tolerance")
    ap.add_argument("--grid", type=int, help="number of grid cells")
    ap.add_argument("--levels", type=int, help="refinement levels for convergence")
    ap.add_argument("--dump-lagrangian", action="store_true",
                    help="write the Lagrangian pair of the initial data as CSV")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.task == "list":
        for name in list_scenarios():
            print(name)
        return EXIT_OK
    out = args.out
    if not args.scenario or not out:
        return _fail(out, EXIT_PARSE, args.task,
                     ScenarioError("--scenario and --out are required"))
    try:
        scn = load(_resolve(args.scenario))
        if args.tol is not None:
            if not args.tol > 0:
                raise ScenarioError("--tol must be positive")
            scn.solver = replace(scn.solver, tol=args.tol)
        if args.grid is not None:
            if args.grid < 4:
                raise ScenarioError("--grid must be at least 4")
            scn.grid = args.grid
            scn.state()
        if args.levels is not None and args.levels < 2:
            raise ScenarioError("--levels must be at least 2")
    except (ScenarioError, ExpressionError, ConfigurationError, CompatibilityError,
            MeasureError, ValueError) as exc:
        return _fail(out, EXIT_PARSE, args.task, exc)
    os.makedirs(out, exist_ok=True)
    t0 = time.perf_counter()
    try:
        rep, extra = TASK_FUNCS[args.task](scn, out, args)
    except (HypothesisError, NotApplicable) as exc:
        return _fail(out, EXIT_PARSE, args.task, exc)
    except InvariantError as exc:
        return _fail(out, EXIT_INVARIANT, args.task, exc)
    except (NonContraction, ResourceError, SolverError, TilingError, CoverageError,
            FloatingPointError) as exc:
        return _fail(out, EXIT_SOLVER, args.task, exc)
    result = {"scenario": scn.name, "task": args.task, "passed": rep.passed,
              "checks": rep.to_dict()["checks"], "seconds": time.perf_counter() - t0}
    result.update(extra)
    write_json(os.path.join(out, "report.json"), result)
    print(rep)
    return EXIT_OK if rep.passed else EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())

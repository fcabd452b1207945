"""Acceptance criteria, one test each.  Every test prints a single PASS/FAIL
line (also repeated in the pytest summary) and asserts it, runtime included.

Run on its own with ``pytest tests/test_acceptance.py -v`` or
``python tests/test_acceptance.py``.
"""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from nvwave import closedform
from nvwave.cli import round_trip_report
from nvwave.diagnostics import (approximation_study, bump, conservation_series, finite_speed_check,
                                h_convergence, oracle_convergence, regularization_check,
                                zero_data_check)
from nvwave.eulerian import from_primitives
from nvwave.evolution import check_semigroup
from nvwave.lagrangian import map_C, map_L
from nvwave.scenario import bundled


def record(number, title, passed, detail, seconds, limit):
    ok = bool(passed) and seconds <= limit
    line = (f"{'PASS' if ok else 'FAIL'} criterion {number:2d} {title}: {detail}; "
            f"{seconds:.2f}s (limit {limit:g}s)")
    print(line)
    ACCEPTANCE.append(line)
    assert ok, line


class Clock:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start


def test_01_round_trip():
    with Clock() as clk:
        reports = {}
        for name in ("smooth_bump", "example1"):
            scn = bundled(name)
            reports[name] = round_trip_report(scn.state(), scn.model)
    worst = {n: max(c.worst for c in r.checks) for n, r in reports.items()}
    detail = ", ".join(f"{n} worst {w:.2e}" for n, w in worst.items())
    record(1, "round trip M(L(state)) = state (50 h^2, cumulatives 1e-8)",
           all(r.passed for r in reports.values()), detail, clk.seconds, 10)


def test_02_closed_form_data_maps():
    with Clock() as clk:
        errs = {}
        scn2, scn3 = bundled("example2"), bundled("example3")
        psi2 = map_L(scn2.state(), scn2.model)
        errs["example2 x1"] = np.abs(psi2.first.x - closedform.x_unit_atom(psi2.first.grid)).max()
        errs["example2 x2"] = np.abs(psi2.second.x
                                     - closedform.f_arctan_inverse(psi2.second.grid)).max()
        psi3 = map_L(scn3.state(), scn3.model)
        errs["example3 x1"] = np.abs(psi3.first.x - closedform.x_unit_atom(psi3.first.grid)).max()
        errs["example3 x2"] = np.abs(psi3.second.x - closedform.x_unit_atom(psi3.second.grid)).max()
        errs["example3 box curve"] = closedform.curve_error(map_C(psi3, scn3.model), psi3, "box")[0]
    worst = max(errs.values())
    record(2, "closed-form x1/x2 maps and box curve (1e-10)", worst <= 1e-10,
           ", ".join(f"{k} {v:.1e}" for k, v in errs.items()), clk.seconds, 1)


def test_03_zero_data():
    scn = bundled("zero")
    with Clock() as clk:
        rep = zero_data_check(scn.nodes(16), scn.model, scn.solver)
    worst = max(c.worst for c in rep.checks)
    record(3, "zero data: t = (X-Y)/(2c(0)), x = (X+Y)/2, zero evolution (1e-12)", rep.passed,
           f"worst {worst:.1e}", clk.seconds, 1)


def test_04_h_relations():
    scn = bundled("smooth_bump")
    with Clock() as clk:
        rows = h_convergence(scn, 3)
    fine = rows[-1]["residuals"]
    ok = all(v <= 1e-7 for v in fine.values())
    ratios = []
    for a, b in zip(rows, rows[1:]):
        for k in fine:
            ratios.append(a["residuals"][k] / b["residuals"][k])
            ok &= ratios[-1] >= 3
    record(4, f"six H relations on {rows[-1]['grid']}^2 (1e-7, ratio >= 3 per halving)", ok,
           f"worst {max(fine.values()):.2e}, smallest ratio {min(ratios):.1f}", clk.seconds, 60)


def test_05_energy_conservation():
    with Clock() as clk:
        smooth = bundled("smooth_bump")
        a = conservation_series(smooth.state(), [0.1, 0.2, 0.3, 0.4, 0.5], smooth.model, smooth.solver)
        conc = bundled("concentration")
        b = conservation_series(conc.state(), conc.times, conc.model, conc.solver)
    ok = a.drift <= 1e-6 and b.drift <= 1e-5 and max(b.atoms_count) > 0
    record(5, "energy drift (smooth 1e-6, concentration 1e-5)", ok,
           f"smooth {a.drift:.1e}, concentration {b.drift:.1e}, atoms per slice {b.atoms_count}",
           clk.seconds, 120)


def test_06_semigroup():
    scn = bundled("smooth_bump")
    with Clock() as clk:
        rep = check_semigroup(scn.state(), 0.2, 0.2, scn.model, scn.solver, factor=20.0)
    comp = rep["S(T1+T2) u = S(T2) S(T1) u"]
    back = rep["time reversal S(-T) S(T) u = u"]
    record(6, "S(0.4) = S(0.2)S(0.2) and time reversal (20 (tol + h^2))",
           comp.passed and back.passed,
           f"composition {comp.worst:.1e}, reversal {back.worst:.1e}, {comp.detail}",
           clk.seconds, 120)


def test_07_finite_difference_oracle():
    scn = bundled("smooth_bump")
    with Clock() as clk:
        rows = oracle_convergence(scn, 0.2, 3)
    orders = [r["observed_order"] for r in rows[1:]]
    errs = [r["u_sup_error"] for r in rows]
    ok = all(o >= 1.5 for o in orders) and errs[0] > errs[1] > errs[2]
    record(7, "u error vs finite differences at T = 0.2 (order >= 1.5, two halvings)", ok,
           "errors " + ", ".join(f"{e:.1e}" for e in errs)
           + "; orders " + ", ".join(f"{o:.2f}" for o in orders), clk.seconds, 180)


def test_08_finite_speed():
    scn = bundled("smooth_bump")
    model = scn.model
    with Clock() as clk:
        base = scn.state()
        g = base.grid
        # extra velocity supported in [1.5, 3.5], outside the cone base [-0.6, 0.6]
        ut = 0.5 * (base.R + base.S) + 0.3 * bump(g - 2.5)
        ux = (base.R - base.S) / (2 * model.c(base.u))
        other = from_primitives(g, base.u, ut, ux, base.rho, base.sigma, model)
        rep = finite_speed_check(base, other, model, 0.3, 0.0, scn.solver, factor=10.0)
    c = rep.checks[0]
    record(8, "finite speed at (t, x) = (0.3, 0) (10 (tol + h^2))", rep.passed,
           f"difference {c.worst:.1e}, {c.detail}", clk.seconds, 60)


def test_09_regularization():
    scn = bundled("regularization")
    with Clock() as clk:
        rep, _ = regularization_check(scn.state(), scn.model, scn.tau, scn.interval, scn.solver)
    record(9, "rho, sigma stay positive and no atoms on the shrunk interval", rep.passed,
           f"min rho {rep['min rho(tau) > 0'].worst:.3f}, "
           f"min sigma {rep['min sigma(tau) > 0'].worst:.3f}, "
           f"atoms {int(rep['no atoms on the shrunk interval'].worst)}", clk.seconds, 60)


def test_10_approximation():
    scn = bundled("approximation")
    with Clock() as clk:
        table, rep = approximation_study(scn.state(), scn.model, [0.2, 0.1, 0.05], scn.tau,
                                         scn.interval, scn.solver)
    rows = table["rows"]
    record(10, "eps = 0.2, 0.1, 0.05: sup|u_eps - u| and ||rho_eps||_L1 strictly decrease",
           rep.passed,
           "u " + ", ".join(f"{r['u_sup_diff']:.2e}" for r in rows)
           + "; rho " + ", ".join(f"{r['rho_L1']:.3f}" for r in rows), clk.seconds, 180)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))

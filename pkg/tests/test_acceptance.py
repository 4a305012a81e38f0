"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

The lines are collected and repeated in the terminal summary under
"acceptance criteria".
"""
import filecmp
import math
import os
import time

import numpy as np
import pytest

from conftest import problem, record
from degenerate_diffusion.cli import acceptance, run_suite
from degenerate_diffusion.diagnostics import (carleman_1d_ratio, lipschitz_stability_check, poincare_constant,
                                              random_admissible_samples, stability_quotients, verify_poincare)
from degenerate_diffusion.grid import Grid
from degenerate_diffusion.inversion import estimate_order, minimize, noise_sweep
from degenerate_diffusion.model import DiffusionModel
from degenerate_diffusion.parabolic import dissipativity_check, l2_relative_error, solve_parabolic
from degenerate_diffusion.presets import INITIAL_DATA, PRESETS, preset_config, true_model, grid_of
from degenerate_diffusion.wave import verify_equivalence, verify_lemma2

pytestmark = pytest.mark.slow
T_START = time.perf_counter()
ELLS = (0.9, 0.99, 1.0, 1.01, 1.1, 1.2)


def gate(tag, ok, detail):
    record(f"{tag} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def recover(name, **over):
    t = time.perf_counter()
    spec = problem(name, **over)
    res = minimize(spec)
    return spec, res, time.perf_counter() - t


def test_ac01_test1_interior_recovery():
    _, res, wall = recover("test1")
    err = abs(res.params[0] - 1.7)
    checks = {"|a_c-1.7|<=1e-4": err <= 1e-4, "cost<=1e-16": res.cost <= 1e-16,
              "iterations<=60": res.iterations <= 60, "wall<=60s": wall <= 60}
    failed = [k for k, v in checks.items() if not v]
    gate("AC1", not failed, f"a_c={res.params[0]:.10g} err={err:.2g} cost={res.cost:.3g} "
         f"iterations={res.iterations} wall={wall:.1f}s" + (f"; failed: {', '.join(failed)}" if failed else ""))


def test_ac02_tests2_3():
    parts, ok = [], True
    for name, truth in (("test2", 1.0), ("test3", 0.2)):
        _, res, wall = recover(name)
        err = abs(res.params[0] - truth)
        ok &= err <= 1e-4 and res.iterations <= 60 and wall <= 60
        parts.append(f"{name} a_c={res.params[0]:.10g} err={err:.2g} it={res.iterations}")
    gate("AC2", ok, "; ".join(parts))


def test_ac03_test4_source():
    _, res, _ = recover("test4")
    err = abs(res.params[0] - 1.7)
    gate("AC3", err <= 1e-4, f"a_c={res.params[0]:.10g} err={err:.2g}")


def test_ac04_boundary_flux_tests5_7():
    parts, ok = [], True
    for name, truth in (("test5", 1.7), ("test6", 1.0), ("test7", 0.2)):
        _, res, _ = recover(name)
        err = abs(res.params[0] - truth)
        ok &= err <= 1e-3
        parts.append(f"{name} a_c={res.params[0]:.8g} err={err:.2g}")
    gate("AC4", ok, "; ".join(parts))


@pytest.mark.parametrize("tag,name,truth", [("AC5", "test8", 0.4), ("AC6", "test9", 1.3)])
def test_ac05_ac06_ell_sweeps(tag, name, truth):
    errs = []
    for ell in ELLS:
        _, res, _ = recover(name, ell=ell)
        errs.append(abs(res.params[0] - truth))
    ok = max(errs) <= 1e-3
    gate(tag, ok, f"{name} max |alpha_c-{truth}| over ell {ELLS} = {max(errs):.2g}")


def test_ac07_test10_recovery_and_order():
    spec, res, _ = recover("test10")
    err = abs(res.params[0] - 0.6)
    # order is fitted against the optimizer's limit; iterate until the gradient vanishes
    full = minimize(spec, pgrad_tol=0.0)
    hist = np.array(full.param_history)
    _, kappa = estimate_order(hist[:-1], full.params)
    try:
        kappa_truth = f"{estimate_order(np.array(res.param_history), [0.6])[1]:.3g}"
    except ValueError as exc:
        kappa_truth = f"n/a ({exc})"
    ok = err <= 1e-3 and 1.3 <= kappa <= 2.3
    gate("AC7", ok, f"alpha_c={res.params[0]:.8g} err={err:.2g} kappa={kappa:.3g} "
         f"(vs alpha_d: {kappa_truth})")


def test_ac08_profiles():
    _, r13, _ = recover("test13")
    err = float(np.max(np.abs(r13.params - (5.0, 1.5))))
    _, r14, _ = recover("test14")
    _, ok14, msg = acceptance(preset_config("test14"), r14.params, r14.cost)
    gate("AC8", err <= 1e-2 and ok14,
         f"linear (b,c)=({r13.params[0]:.6g}, {r13.params[1]:.6g}) err={err:.2g}; quadratic "
         f"(b,c,h)=({', '.join(f'{v:.5g}' for v in r14.params)}) {msg}")


def test_ac09_noise_robustness():
    levels = (0.01, 0.001, 0.0001, 0.00001)
    bounds = (0.02, 2e-3, 2e-4, 2e-5)
    rows = noise_sweep(problem("test1"), levels=levels, seeds=range(5), truth=(1.7,))
    meds = [float(np.median([r["error"] for r in rows if r["level"] == lv])) for lv in levels]
    ok = all(m <= b for m, b in zip(meds, bounds))
    gate("AC9", ok, "medians " + ", ".join(f"{100 * lv:g}%: {m:.2g} (<= {b:g})"
                                          for lv, m, b in zip(levels, meds, bounds)))


def test_ac10_stability_quotients():
    rep = stability_quotients(problem("test1"), n_trials=50, eps_max=0.05, seed=0)
    d = rep.details
    gate("AC10", rep.passed and rep.quotients.size == 50,
         f"50 trials, all finite={bool(np.all(np.isfinite(rep.quotients)))}, "
         f"max/median={d['max_over_median']:.3g} (<= 20), median K={d['median']:.3g}")


def test_ac11_reznitskaya_equivalence():
    grid = Grid(1.0, 200, 1.0, 8)
    e0 = verify_equivalence(DiffusionModel.constant(1.0, 0.0), lambda x: np.sin(np.pi * x), [0.05, 0.1, 0.2], grid)
    e5 = verify_equivalence(DiffusionModel.power(0.5), lambda x: x * (1 - x), [0.05], grid, reference_refine=4)
    gate("AC11", e0.max() <= 1e-2 and e5.max() <= 3e-2,
         f"alpha=0 errors {', '.join(f'{e:.2g}' for e in e0)} (<= 1e-2); alpha=0.5 error {e5[0]:.2g} (<= 3e-2)")


def test_ac12_transform_time_derivative():
    ts = np.linspace(0.05, 0.5, 10)
    d = {
        "tau^2": verify_lemma2(lambda s: s ** 2, lambda s: 2 + 0 * s, ts),
        "1": verify_lemma2(lambda s: np.ones_like(s), lambda s: 0 * s, ts),
        "cos(pi tau)": verify_lemma2(lambda s: np.cos(np.pi * s), lambda s: -np.pi ** 2 * np.cos(np.pi * s), ts),
    }
    gate("AC12", max(d.values()) <= 1e-4, ", ".join(f"{k}: {v:.2g}" for k, v in d.items()))


def test_ac13_poincare():
    grid = Grid(1.0, 400, 1.0, 8)
    worst, parts = 0.0, []
    for k, alpha in enumerate((0.0, 0.5, 1.0, 1.3, 1.9)):
        rep = verify_poincare(random_admissible_samples(alpha, grid, 1000, seed=k), alpha, 1.0)
        q = rep.max_ratio / poincare_constant(alpha, 1.0)
        worst = max(worst, q)
        parts.append(f"alpha={alpha:g}: {q:.3f}")
    gate("AC13", worst <= 1.01, "max ratio / C_p over 1000 samples each: " + ", ".join(parts))


def test_ac14_lipschitz_grids():
    a = np.linspace(0.2, 1.7, 5)
    lin = [lipschitz_stability_check(x, y, "linear") for x in a for y in a]
    al = (0.1, 0.3, 0.5, 0.7, 0.9)
    pw = [lipschitz_stability_check(x, y, "power", ell=0.9) for x in al for y in al]
    ok = all(r.passed for r in lin + pw)
    slack = max(r.lhs / (r.constant * r.rhs) for r in lin + pw if r.lhs > 0)
    gate("AC14", ok, f"linear {sum(r.passed for r in lin)}/25, power (ell=0.9) {sum(r.passed for r in pw)}/25, "
         f"worst lhs/(C rhs)={slack:.3g}")


def test_ac15_carleman():
    parts, ok = [], True
    for name, f, fp in (("1-x", lambda x: 1 - x, lambda x: -np.ones_like(x)),
                        ("(1-x)^2", lambda x: (1 - x) ** 2, lambda x: -2 * (1 - x))):
        rep = carleman_1d_ratio(f, s_list=(10, 20, 40, 80, 160), f_prime=fp)
        ok &= rep.passed
        parts.append(f"{name}: r(s)={np.array2string(rep.ratios, precision=3)} r(320)={rep.ratio_at_double:.3g}")
    gate("AC15", ok, "; ".join(parts))


def _self_convergence(alpha, kind):
    u0 = INITIAL_DATA["quartic"]
    runs = [solve_parabolic(DiffusionModel.power(alpha), kind, Grid(1.0, nx, 0.5, nt), u0).u[-1]
            for nx, nt in ((24, 20), (49, 80), (99, 320))]
    g = Grid(1.0, 24, 0.5, 20)
    d1 = l2_relative_error(runs[0], runs[1][::2], g)
    d2 = l2_relative_error(runs[1][::2], runs[2][::4], g)
    return d1, d2


def test_ac16_infrastructure(tmp_path):
    parts, ok = [], True
    # dissipativity on every f = 0 preset, inversion and data grids
    worst = 0.0
    for name, cfg in PRESETS.items():
        if cfg.source != "none":
            continue
        g = grid_of(cfg)
        for grid in (g, g.refined(cfg.refine_space, cfg.refine_time)):
            good, excess = dissipativity_check(
                solve_parabolic(true_model(cfg), cfg.kind, grid, INITIAL_DATA[cfg.u0]))
            ok &= good
            worst = max(worst, excess)
    parts.append(f"dissipative on all f=0 presets (worst excess {worst:.2g})")
    # bit-reproducibility of the full suite
    names = [p for p in PRESETS if p != "custom"]
    dirs = [tmp_path / "a", tmp_path / "b"]
    results = [run_suite(names, str(d)) for d in dirs]
    same = True
    for root, _, files in os.walk(dirs[0]):
        for fname in files:
            if fname.endswith(".csv"):
                other = os.path.join(dirs[1], os.path.relpath(os.path.join(root, fname), dirs[0]))
                same &= filecmp.cmp(os.path.join(root, fname), other, shallow=False)
    suite_ok = all(r[0] for r in results)
    ok &= same and suite_ok
    parts.append(f"suite of {len(names)} presets passed={suite_ok}, CSVs byte-identical={same}")
    # self-convergence on nested grids
    factors = []
    for alpha, kind in ((0.4, "weak"), (1.3, "strong")):
        d1, d2 = _self_convergence(alpha, kind)
        ok &= d2 < d1 <= 4 * d2
        factors.append(f"alpha={alpha}: {d1 / d2:.3g}")
    parts.append("self-convergence d1/d2 " + ", ".join(factors) + " (in (1, 4])")
    total = time.perf_counter() - T_START
    ok &= total <= 1800
    parts.append(f"acceptance module wall {total:.0f}s (<= 1800s)")
    gate("AC16", ok, "; ".join(parts))

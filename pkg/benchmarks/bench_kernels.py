"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--nx 200] [--nt 2000]

Each case runs on identical inputs; the maximum deviation between the two
backends is printed next to the timings.
"""
import argparse
import time

import numpy as np

from degenerate_diffusion._kernels import _fallback
from degenerate_diffusion.grid import Grid
from degenerate_diffusion.model import DegeneracyKind, DiffusionModel, cell_conductance
from degenerate_diffusion.parabolic import TABLEAUS, assemble_operator, time_substeps

try:
    from degenerate_diffusion._kernels import _core
except ImportError:
    _core = None


def best_of(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def cases(nx, nt):
    g = Grid(1.0, nx, 5.0, nt)
    kind = DegeneracyKind.STRONG
    k = cell_conductance(DiffusionModel.constant(1.7, 1.0), g, kind)
    lo, di, up, free = assemble_operator(k, g, kind)
    u0 = (0.5 * g.x ** 2 * (1 - g.x))[free]
    steps, counts = time_substeps(g)
    for scheme in ("euler", "sdirk3"):
        tab = TABLEAUS[scheme]
        yield f"march {scheme} nx={nx} nt={nt} ({steps.size} steps)", \
            lambda m, tab=tab: m.march(lo, di, up, u0, steps, counts, tab)
    src = lambda t: np.full(u0.shape, 2.0 * t)
    yield f"march sdirk3 + source nx={nx}", \
        lambda m: m.march(lo, di, up, u0, steps, counts, TABLEAUS["sdirk3"], src)
    gw = Grid(1.0, nx, 1.0, 8)
    kw = cell_conductance(DiffusionModel.power(0.5), gw, DegeneracyKind.WEAK)
    lw, dw, uw, fw = assemble_operator(kw, gw, DegeneracyKind.WEAK)
    v0 = np.sin(np.pi * gw.x)[fw]
    yield f"leapfrog nx={nx} 20000 steps", lambda m: m.leapfrog_march(lw, dw, uw, v0, 1e-4, 20000, 100)
    rhs = np.linspace(1.0, 2.0, di.size)
    yield f"tridiagonal solve n={di.size}", lambda m: m.solve_tridiagonal(lo, 4.0 + di, up, rhs)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--nx", type=int, default=200)
    p.add_argument("--nt", type=int, default=2000)
    args = p.parse_args(argv)
    if _core is None:
        print("compiled kernels not built; only the fallback is available")
    print(f"{'case':<44} {'python [s]':>11} {'cython [s]':>11} {'speedup':>8} {'max diff':>9}")
    for name, fn in cases(args.nx, args.nt):
        tp, op = best_of(lambda: fn(_fallback), args.repeat)
        if _core is None:
            print(f"{name:<44} {tp:11.4g}")
            continue
        tc, oc = best_of(lambda: fn(_core), args.repeat)
        diff = float(np.max(np.abs(np.asarray(op) - np.asarray(oc))))
        print(f"{name:<44} {tp:11.4g} {tc:11.4g} {tp / tc:8.1f} {diff:9.2g}")


if __name__ == "__main__":
    main()

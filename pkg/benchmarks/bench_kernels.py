"""Time assembly and field kernels on the numba and numpy backends.

Usage: python3 benchmarks/bench_kernels.py [--max-edge 6] [--points 4000]
"""
import argparse
import time

import numpy as np

from surfepr import _accel
from surfepr.field_epr import evaluate_field
from surfepr.geometry import generate_gcpw
from surfepr.mesh import RefinementConfig, refine, triangulate
from surfepr.solver import assemble, build_tables


def timed(fn, repeat=1):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-edge", type=float, default=8.0)
    ap.add_argument("--points", type=int, default=2000)
    args = ap.parse_args()

    lay = generate_gcpw(5.0, 30.0, 25.0, L=300.0, L0=60.0, Wg=100.0)
    mesh = refine(triangulate(lay, args.max_edge, 4.0), RefinementConfig(0, 4, 2.0, 1e-3))
    st = lay.stackup
    planes = [-1.5e-3, 0.0]
    tables = build_tables(st, planes, lay.diameter, per_decade=32)
    rng = np.random.default_rng(0)
    pts = np.column_stack([rng.uniform(-40, 40, args.points), rng.uniform(-30, 30, args.points),
                           np.full(args.points, -1.5e-3)])
    q = rng.normal(size=mesh.n)
    print(f"N = {mesh.n} elements, {args.points} field points")

    backends = ["numpy"] + (["numba"] if _accel.HAVE_NUMBA else [])
    results = {}
    for name in backends:
        _accel.set_backend(name)
        if name == "numba":  # compile outside the timing
            assemble(mesh.subset(np.arange(mesh.n) < 50), st, tables)
            evaluate_field(pts[:5], assemble(mesh.subset(np.arange(mesh.n) < 50), st, tables), q[:50])
        ta, system = timed(lambda: assemble(mesh, st, tables))
        tf, (_, E) = timed(lambda: evaluate_field(pts, system, q))
        results[name] = (system.P, E)
        print(f"{name:6s} assemble {ta:8.2f} s   field {tf:8.2f} s")
    if len(results) == 2:
        (Pa, Ea), (Pb, Eb) = results["numpy"], results["numba"]
        print(f"max relative difference: P {np.abs(Pa - Pb).max() / np.abs(Pa).max():.2e}, "
              f"E {np.abs(Ea - Eb).max() / np.abs(Ea).max():.2e}")


if __name__ == "__main__":
    main()

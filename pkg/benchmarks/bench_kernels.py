"""Compare the compiled and pure-Python simplex kernels.

Times each kernel on a random dense tableau the size of the N=10 PGS
relaxation, then the full relaxation solve on the default highway scenario,
and checks both backends reach the same optimum.

    python benchmarks/bench_kernels.py --users 5 10 --repeat 3
"""
import argparse
import time

import numpy as np

from greenstream import kernels
from greenstream.config import load
from greenstream.experiment import build_world
from greenstream.pgs import PgsInstance, build_model
from greenstream.pgs.solver import solve_lp_relaxation


def best_of(fn, repeat):
    out = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        out = min(out, time.perf_counter() - t0)
    return out


def micro(backend, m, n, repeat, rng):
    T0 = rng.normal(size=(m, n))
    T0[rng.random((m, n)) < 0.9] = 0.0  # PGS tableaus start sparse
    T0[:, 0] += 1.0
    d = rng.normal(size=n)
    status = rng.integers(1, 3, size=n).astype(np.int8)
    elig = np.ones(n, dtype=np.uint8)
    alpha = rng.normal(size=m)
    beta = np.abs(rng.normal(size=m))
    ub = np.full(m, np.inf)
    basis = np.arange(m, dtype=np.int64)

    def do_pivot():
        T = T0.copy()
        for r in range(0, min(m, 50)):
            backend.pivot(T, r, 0 if T[r, 0] != 0 else int(np.flatnonzero(T[r])[0]))

    return {
        "pivot x50": best_of(do_pivot, repeat),
        "price x1000": best_of(lambda: [backend.price(d, status, elig, 1e-9, False)
                                        for _ in range(1000)], repeat),
        "ratio x1000": best_of(lambda: [backend.ratio_test(alpha, beta, ub, basis, 1.0, 1e-9, False)
                                        for _ in range(1000)], repeat),
    }


def relaxation(backend, n_users, repeat):
    cfg = load(None, {"scenario.n_vehicles": n_users})
    world = build_world(cfg)
    inst = PgsInstance(world.rates, world.assoc, world.ladder, world.schedule, 3.75)
    model = build_model(inst)
    res = {}

    def solve():
        res["r"] = solve_lp_relaxation(model, tighten=True, kernels=backend)

    t = best_of(solve, repeat)
    return t, res["r"].bound, res["r"].pivots, model.n_rows, model.n_cols


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--users", type=int, nargs="+", default=[5, 10])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    names = kernels.available_backends()
    print(f"backends: {', '.join(names)} (active: {kernels.BACKEND})")
    rng = np.random.default_rng(args.seed)
    print(f"\n{'kernel':<14}" + "".join(f"{b:>12}" for b in names) + "     speedup")
    rows = {b: micro(kernels.get_backend(b), 730, 3280, args.repeat, rng) for b in names}
    for k in rows["python"]:
        ts = [rows[b][k] for b in names]
        sp = f"{ts[0] / ts[-1]:>10.1f}x" if len(ts) > 1 else ""
        print(f"{k:<14}" + "".join(f"{t * 1e3:>10.2f}ms" for t in ts) + sp)

    print(f"\n{'LP relaxation':<14}" + "".join(f"{b:>12}" for b in names) + "     speedup  bound")
    for n in args.users:
        res = [relaxation(kernels.get_backend(b), n, args.repeat) for b in names]
        bounds = [r[1] for r in res]
        assert max(bounds) - min(bounds) <= 1e-7 * max(1.0, abs(bounds[0])), bounds
        ts = [r[0] for r in res]
        sp = f"{ts[0] / ts[-1]:>10.1f}x" if len(ts) > 1 else ""
        label = f"N={n} {res[0][3]}x{res[0][4]}"
        print(f"{label:<14}" + "".join(f"{t:>11.3f}s" for t in ts) + sp + f"  {bounds[0]:.6f}")


if __name__ == "__main__":
    main()

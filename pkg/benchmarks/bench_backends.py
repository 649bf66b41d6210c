"""Compiled kernels vs the numpy fallback.

    python3 benchmarks/bench_backends.py [--repeat 3] [--starts 120]

Times the Jacobi eigensolver over a range of dimensions and the commutant
Newton search used by the multistart, on identical inputs for both backends,
and checks that the two agree.
"""
import argparse
import time

import numpy as np

from extremal_dm import _backend
from extremal_dm.extremal_solver import ExtremalProblem, start_point
from extremal_dm.models import BecParams, bec_hamiltonian
from extremal_dm.sampling import random_hermitian


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_eigh(kern, mats, repeat):
    def run():
        return [kern.jacobi_eigh(m, 1e-12, 100)[0] for m in mats]
    return best_of(run, repeat)


def bench_search(kern, p, starts, repeat):
    system = kern.StationaritySystem(
        p.basis.generators, p.h, p.constants.as_array(),
        commutator=p.commutator_matrix(), minpoly=p.minimal_polynomial(),
        mode=kern.COMMUTANT)
    x0s = [start_point(p, 0, i) for i in range(starts)]

    def run():
        return [system.solve(x, 1e-14, 200)[0] for x in x0s]
    return best_of(run, repeat)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--starts", type=int, default=120)
    args = ap.parse_args()

    backends = {"python": _backend.python_kernels}
    if _backend.compiled_kernels is not None:
        backends["compiled"] = _backend.compiled_kernels
    else:
        print("compiled extension not built; timing the fallback only")

    rng = np.random.default_rng(0)
    print(f"{'kernel':<28}{'backend':<10}{'seconds':>10}{'speedup':>10}")
    for d in (2, 3, 4, 6, 8):
        mats = [random_hermitian(d, rng) for _ in range(200)]
        res = {name: bench_eigh(k, mats, args.repeat) for name, k in backends.items()}
        _report(f"jacobi_eigh d={d} x200", res)

    H = bec_hamiltonian(BecParams(0.3, 0.5, -1.0))
    for label, c in (("pure", (0.0, 0.0)), ("mixed", (0.29, 0.02))):
        p = ExtremalProblem.build(H, c)
        res = {name: bench_search(k, p, args.starts, args.repeat) for name, k in backends.items()}
        _report(f"newton {label} d=3 x{args.starts}", res)


def _report(label, res):
    base = res["python"][0]
    for name, (t, _) in res.items():
        print(f"{label:<28}{name:<10}{t:>10.4f}{base / t:>9.1f}x")
    if len(res) == 2:
        a, b = (np.asarray(v[1]) for v in res.values())
        print(f"{'':<28}max backend difference {np.max(np.abs(a - b)):.2e}")


if __name__ == "__main__":
    main()

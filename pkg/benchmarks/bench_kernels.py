"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5] [--json]

Times three workloads on each available backend: evaluating the coordinate
Jacobian program, LU factor + solve of a 3x3 system, and a full lifted
trajectory (1000 RK4 steps).  The backend is swapped by rebinding the kernel
functions on the kernels module, so both runs share the same compiled programs.
"""

from __future__ import annotations

import argparse
import json
import timeit
from importlib.resources import files

import numpy as np

import fibrelin.kernels as kernels
import fibrelin.linalg as linalg_mod
from fibrelin.normal_form import build_normal_form
from fibrelin.sim import verify_projection
from fibrelin.system import load_system


def use_backend(backend) -> None:
    for name in ("run_program", "run_batch", "lu_factor", "lu_solve"):
        setattr(kernels, name, getattr(backend, name))


def workloads(sys, nf):
    jac = nf.jacobian_program()
    x = np.array([0.5, 0.2, -0.1])
    J = jac(x).reshape(3, 3)
    b = np.array([1.0, -2.0, 0.5])

    def eval_jacobian():
        for _ in range(1000):
            jac(x)

    def lu_factor_solve():
        for _ in range(1000):
            linalg_mod.LU(J).solve(b)

    def lifted_trajectory():
        verify_projection(sys, nf, x, "sin(t)", 1.0, 1e-3)

    return {"eval_jacobian_x1000": eval_jacobian, "lu_3x3_x1000": lu_factor_solve,
            "lifted_trajectory_1000_steps": lifted_trajectory}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args()

    sys = load_system(files("fibrelin") / "data" / "example.fl")
    nf = build_normal_form(sys)
    backends = [kernels.python_backend]
    if kernels.compiled_backend is not None:
        backends.insert(0, kernels.compiled_backend)
    results: dict[str, dict[str, float]] = {}
    for backend in backends:
        use_backend(backend)
        for name, fn in workloads(sys, nf).items():
            best = min(timeit.repeat(fn, number=1, repeat=args.repeat))
            results.setdefault(name, {})[backend.BACKEND] = best
    use_backend(kernels.active)

    if args.json:
        print(json.dumps(results, indent=2))
        return
    names = [b.BACKEND for b in backends]
    print(f"{'workload':32s}" + "".join(f"{n:>12s}" for n in names) + ("     speedup" if len(names) == 2 else ""))
    for name, row in results.items():
        line = f"{name:32s}" + "".join(f"{row[n] * 1e3:10.2f}ms" for n in names)
        if len(names) == 2:
            line += f"{row['python'] / row['cython']:11.1f}x"
        print(line)
    if kernels.compiled_backend is None:
        print("compiled backend not built; only the Python fallback was timed")


if __name__ == "__main__":
    main()

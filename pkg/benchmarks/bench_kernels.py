"""Time the compiled and NumPy cell kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--n 64] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from bfsplate import _kernels_py, kernels
from bfsplate.bfs import biharmonic_ingredients, dof_scale, local_mass, reference_table
from bfsplate.cases import jump_coefficient
from bfsplate.mesh import build_mesh, classify_boundary
from bfsplate.quadrature import gauss_legendre, tensorize

try:
    from bfsplate import _kernels as _kernels_cy
except ImportError:
    _kernels_cy = None


def cases(n):
    mesh = build_mesh((-1.0, 1.0, -1.0, 1.0), n, n)
    cell_free = classify_boundary(mesh).cell_free_table
    table, weights = biharmonic_ingredients(mesh, jump_coefficient())
    q = tensorize(gauss_legendre(6))
    coeffs = np.random.default_rng(0).standard_normal((4, mesh.n_dofs))
    return {
        "scatter_constant": lambda impl: kernels.scatter_constant(cell_free, local_mass(mesh), impl=impl),
        "scatter_weighted": lambda impl: kernels.scatter_weighted(cell_free, table, weights, impl=impl),
        "cell_values": lambda impl: kernels.cell_values(
            coeffs, mesh.cell_dof_table, dof_scale(mesh.hx, mesh.hy), reference_table(q.x, q.y), impl=impl
        ),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=64, help="cells per side")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels_cy is None:
        print("compiled extension not built; only the NumPy backend is timed")
    print(f"mesh {args.n}x{args.n}, best of {args.repeat}")
    print(f"{'kernel':<18} {'numpy [ms]':>11} {'cython [ms]':>12} {'speedup':>8}")
    for name, fn in cases(args.n).items():
        t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat))
        if _kernels_cy is None:
            print(f"{name:<18} {1e3 * t_py:11.2f} {'-':>12} {'-':>8}")
            continue
        t_cy = min(timeit.repeat(lambda: fn(_kernels_cy), number=1, repeat=args.repeat))
        print(f"{name:<18} {1e3 * t_py:11.2f} {1e3 * t_cy:12.2f} {t_py / t_cy:8.1f}")


if __name__ == "__main__":
    main()

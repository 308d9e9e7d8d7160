"""Compare the compiled and pure-Python kernel backends.

Usage::

    python3 benchmarks/bench_kernels.py [--size 200] [--repeat 3]

Each kernel runs on the same inputs under every available backend; the
outputs are checked for equality before timings are reported.
"""
import argparse
import timeit

import numpy as np

from doorscape import kernels, mesh_grid as mg
from doorscape.fixtures import two_room_mesh


def inputs(size, seed=0):
    rng = np.random.default_rng(seed)
    occ = rng.random((size, size)) < 0.02
    occ[0] = occ[-1] = occ[:, 0] = occ[:, -1] = True
    segs = rng.uniform(0, size - 1, (200, 4))
    return occ, segs


def bench(backend, occ, segs, repeat):
    free = ~occ
    d2, wr, wc = backend.edt(occ)
    ridge = backend.ridge_mask(free, d2, wr, wc, 4)
    blob = np.zeros_like(occ)
    blob[10:-10, 10:-10] = True
    jobs = {
        "edt": lambda: backend.edt(occ),
        "ridge_mask": lambda: backend.ridge_mask(free, d2, wr, wc, 4),
        "thin": lambda: backend.thin(blob),
        "rasterize": lambda: backend.rasterize(segs, occ.shape),
    }
    times = {k: min(timeit.repeat(f, number=1, repeat=repeat)) for k, f in jobs.items()}
    outputs = (d2, wr, wc, ridge, backend.thin(blob), backend.rasterize(segs, occ.shape))
    return times, outputs


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    occ, segs = inputs(args.size)
    results = {}
    for name in sorted(kernels.BACKENDS):
        results[name] = bench(kernels.get_backend(name), occ, segs, args.repeat)
    names = sorted(results)
    ref = results[names[0]][1]
    for name in names[1:]:
        for a, b in zip(ref, results[name][1]):
            assert np.array_equal(a, b), f"{name} output differs from {names[0]}"

    print(f"grid {args.size}x{args.size}, best of {args.repeat}, seconds")
    print(f"{'kernel':<12}" + "".join(f"{n:>12}" for n in names)
          + ("     speedup" if "cython" in results else ""))
    for k in results[names[0]][0]:
        row = f"{k:<12}" + "".join(f"{results[n][0][k]:>12.4f}" for n in names)
        if "cython" in results:
            row += f"{results['python'][0][k] / results['cython'][0][k]:>11.1f}x"
        print(row)

    grid_time = min(timeit.repeat(lambda: mg.grid_from_mesh(two_room_mesh(), mg.SliceConfig()),
                                  number=1, repeat=args.repeat))
    print(f"\ntwo-room mesh -> grid with the {kernels.BACKEND} backend: {grid_time:.3f} s")


if __name__ == "__main__":
    main()

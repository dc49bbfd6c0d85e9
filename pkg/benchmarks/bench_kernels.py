"""Time the numba kernels against their pure-numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is warmed up once (so JIT compilation is excluded), then timed
as the best of ``--repeat`` runs.  Outputs are compared before timing.
"""
import argparse
import time

import numpy as np

from coxwalk import _kernels as K
from coxwalk.generators import slot_arrays
from coxwalk.interchange import build_interchange_graph, enumerate_fiber
from coxwalk.signed import build_complete_graph


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    g5 = build_complete_graph("D", 5)
    target = np.zeros(5, dtype=np.int64)
    yield "fiber_masks D5 s=0", (lambda: K.fiber_masks_numpy(g5.vectors, target)), \
        (lambda: K.fiber_masks_numba(g5.vectors, target)), np.array_equal

    fiber = enumerate_fiber("C", 4, (0, 0, 0, 0))
    smask, sval, _ = slot_arrays("C", 4)
    yield f"neighbor_table C4 s=0 ({len(fiber)} vertices)", \
        (lambda: K.neighbor_table_numpy(fiber.masks, smask, sval)), \
        (lambda: K.neighbor_table_numba(fiber.masks, smask, sval)), \
        lambda a, b: all(np.array_equal(x, y) for x, y in zip(a, b))

    rng = np.random.default_rng(0)
    rows = [rng.integers(-2, 3, size=(14, 4)) for _ in range(50)]
    yield "smallest_zero_subset 50 x 14 rows", \
        (lambda: [K.smallest_zero_subset_numpy(r) for r in rows]), \
        (lambda: [K.smallest_zero_subset_numba(r) for r in rows]), lambda a, b: a == b

    g = build_interchange_graph(enumerate_fiber("C", 3, (0, 0, 0)))
    coins = rng.integers(0, 2, 1_000_000)
    picks = rng.integers(0, g.degree, 1_000_000)
    yield "lazy_walk 10^6 steps", (lambda: K.lazy_walk_numpy(g.targets, 0, coins, picks)), \
        (lambda: K.lazy_walk_numba(g.targets, 0, coins, picks)), np.array_equal


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if not K.HAVE_NUMBA:
        raise SystemExit("numba is unavailable (or COXWALK_NO_NUMBA is set); nothing to compare")
    print(f"{'kernel':44s} {'numpy s':>10s} {'numba s':>10s} {'speedup':>8s}")
    for name, slow, fast, same in cases():
        if not same(slow(), fast()):
            raise SystemExit(f"{name}: numpy and numba disagree")
        a, b = best_of(slow, args.repeat), best_of(fast, args.repeat)
        print(f"{name:44s} {a:10.4f} {b:10.4f} {a / b:8.1f}x")


if __name__ == "__main__":
    main()

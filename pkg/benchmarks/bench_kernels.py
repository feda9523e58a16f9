"""Compare the compiled search kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 3]

Both backends run the same workloads through the public solver functions;
results are checked for equality before timings are reported.
"""
import argparse
import time
from contextlib import contextmanager

from tilefix import _kernels_py, kernels
from tilefix.fixpoint import compile, layout, skeleton_tiles, zero_program
from tilefix.solver import (
    SolveRequest, count_rectangles, full_shift_tiles, golden_mean_tiles, solve_patch, torus_tilings,
)
from tilefix.tm import check_determinacy, corpus, diagram_tiles

try:
    from tilefix import _kernels as _compiled
except ImportError:
    _compiled = None


@contextmanager
def backend(impl):
    saved = kernels.search, kernels.profile_count
    kernels.search, kernels.profile_count = impl.search, impl.profile_count
    try:
        yield
    finally:
        kernels.search, kernels.profile_count = saved


def workloads():
    golden = golden_mean_tiles()
    tiny = compile(zero_program(), layout(10, 0, 6, free_rows=1))
    bounce = diagram_tiles(corpus()["bounce"])
    return [
        ("count golden 8x8 (transfer)", lambda: count_rectangles(golden, 8, 8).count),
        ("count full-2 4x4 (search)",
         lambda: solve_patch(SolveRequest(full_shift_tiles(2), 4, 4, mode="count")).count),
        ("enumerate golden 4x3", lambda: len(solve_patch(SolveRequest(golden, 4, 3, mode="enumerate")).patches)),
        ("skeleton-5 torus 5x5 count", lambda: torus_tilings(skeleton_tiles(5), 5, 5).count),
        ("compiled N=10 torus 10x10", lambda: torus_tilings(tiny, 10, 10).count),
        ("determinacy bounce", lambda: check_determinacy(bounce).ok),
    ]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _compiled is None:
        print("compiled kernels not built; run: pip install -e . --no-build-isolation")
        return 1
    print(f"{'workload':32s} {'cython s':>10s} {'python s':>10s} {'speedup':>8s}")
    for name, fn in workloads():
        with backend(_compiled):
            fast, a = best_of(fn, args.repeat)
        with backend(_kernels_py):
            slow, b = best_of(fn, args.repeat)
        if a != b:
            raise SystemExit(f"{name}: backends disagree ({a} != {b})")
        print(f"{name:32s} {fast:10.4f} {slow:10.4f} {slow / fast:8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

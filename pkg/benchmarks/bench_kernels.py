"""Compare the compiled kernels with the pure-Python fallback.

Run with ``python3 benchmarks/bench_kernels.py``. Each kernel is timed on the
same inputs under both backends and the outputs are checked for equality.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from stratmanip import kernels
from stratmanip.decomposition import decompose
from stratmanip.scenes import corridor
from stratmanip.strata import ContactSet


def cases(eps: float):
    prob = corridor(True)
    cx = decompose(prob.scene, ContactSet((0,)), eps)
    rng = np.random.default_rng(0)
    chart = cx.chart
    pts_chart = chart.lo + rng.random((20000, chart.dim)) * (chart.hi - chart.lo)
    pts = np.clip(cx.to_grid_units(pts_chart), 0, cx.full)
    spec = chart.spec
    tree, wrap = cx.tree, chart.wrap.astype(np.int8)
    return {
        "classify_boxes": lambda impl: spec.classify(cx.lo, cx.hi, impl=impl),
        "facet_pairs": lambda impl: kernels.facet_pairs(tree, cx.ilo, cx.ihi, cx.full, wrap, impl=impl),
        "locate_points": lambda impl: kernels.locate_points(tree, pts, impl=impl),
    }, len(cx)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, default=0.05)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    fns, ncells = cases(args.eps)
    py = kernels.backend("python")
    try:
        cc = kernels.backend("compiled")
    except ImportError:
        cc = None
    print(f"corridor scene, class {{O1}}, eps={args.eps}, {ncells} cells")
    print(f"{'kernel':<16}{'python [s]':>12}{'compiled [s]':>14}{'speedup':>10}")
    for name, fn in fns.items():
        t_py = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat))
        if cc is None:
            print(f"{name:<16}{t_py:>12.4f}{'n/a':>14}{'':>10}")
            continue
        a, b = fn(py), fn(cc)
        assert np.array_equal(np.asarray(a), np.asarray(b)), f"{name}: backends disagree"
        t_cc = min(timeit.repeat(lambda: fn(cc), number=1, repeat=args.repeat))
        print(f"{name:<16}{t_py:>12.4f}{t_cc:>14.4f}{t_py / t_cc:>9.1f}x")


if __name__ == "__main__":
    main()

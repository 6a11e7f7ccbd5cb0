"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy
reference implementation is used. Set ``STRATMANIP_PURE_PYTHON=1`` to force
the fallback.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _kernels_py

if os.environ.get("STRATMANIP_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _kernels_py

BACKEND = "compiled" if _impl is not _kernels_py else "python"

FREE, BLOCKED, MIXED = _kernels_py.FREE, _kernels_py.BLOCKED, _kernels_py.MIXED
MODE_CONTACT, MODE_FREE, MODE_FIXED = (
    _kernels_py.MODE_CONTACT,
    _kernels_py.MODE_FREE,
    _kernels_py.MODE_FIXED,
)


def backend(name: str | None = None):
    """Return the kernel module by name (``"compiled"``/``"python"``) or the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "compiled":
        from . import _kernels  # type: ignore[attr-defined]

        return _kernels
    raise ValueError(name)


@dataclass(frozen=True)
class ChartSpec:
    """Flat description of how chart coordinates map to body positions."""

    ws: np.ndarray
    radii: np.ndarray
    mode: np.ndarray
    dim: np.ndarray
    fixed: np.ndarray
    rho: np.ndarray
    verts: np.ndarray
    start: np.ndarray
    tol: float

    @classmethod
    def build(cls, scene, mode, dim, fixed, tol=None) -> "ChartSpec":
        from .geometry import CONTACT_TOL

        verts, start = scene.packed_obstacles()
        radii = scene.radii
        return cls(
            ws=np.asarray(scene.workspace, dtype=float),
            radii=radii,
            mode=np.asarray(mode, dtype=np.int64),
            dim=np.asarray(dim, dtype=np.int64),
            fixed=np.asarray(fixed, dtype=float).reshape(-1, 4),
            rho=radii[0] + radii[1:],
            verts=verts,
            start=start,
            tol=CONTACT_TOL if tol is None else tol,
        )

    @classmethod
    def for_configuration(cls, scene) -> "ChartSpec":
        n = scene.n
        return cls.build(
            scene, [MODE_FREE] * n, [2 + 2 * k for k in range(n)], np.zeros((n, 4))
        )

    def classify(self, lo, hi, impl=None) -> np.ndarray:
        impl = impl or _impl
        lo = np.ascontiguousarray(lo, dtype=float)
        hi = np.ascontiguousarray(hi, dtype=float)
        if len(lo) == 0:
            return np.zeros(0, dtype=np.int8)
        return impl.classify_boxes(
            lo, hi, self.ws, self.radii, self.mode, self.dim, self.fixed,
            self.rho, self.verts, self.start, self.tol,
        )


def classify_boxes(lo, hi, spec: ChartSpec) -> np.ndarray:
    return spec.classify(lo, hi)


def query_leaves(tree, qlo, qhi):
    return _impl.query_leaves(tree.split, tree.mid, tree.child, tree.leaf, qlo, qhi)


def facet_pairs(tree, ilo, ihi, full, wrap, impl=None):
    impl = impl or _impl
    return impl.facet_pairs(tree.split, tree.mid, tree.child, tree.leaf, ilo, ihi, full, wrap)


def locate_points(tree, pts, impl=None):
    impl = impl or _impl
    return impl.locate_points(tree.split, tree.mid, tree.child, tree.leaf, np.atleast_2d(pts))

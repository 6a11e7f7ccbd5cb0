"""Adaptive box decomposition of contact-class charts.

Every box is an integer interval on a per-dimension dyadic grid, so facet
adjacency and point location reduce to exact integer comparisons against the
subdivision tree.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as _cc

from . import kernels
from .geometry import Scene
from .strata import Chart, ContactSet, Leaf

FREE, BLOCKED, MIXED = kernels.FREE, kernels.BLOCKED, kernels.MIXED
LABEL_NAMES = {FREE: "FREE", BLOCKED: "BLOCKED", MIXED: "MIXED"}
DEFAULT_MAX_CELLS = 2_000_000


class ResourceCapExceeded(RuntimeError):
    pass


def max_cells_default() -> int:
    env = os.environ.get("STRATMANIP_MAX_CELLS")
    return int(env) if env else DEFAULT_MAX_CELLS


@dataclass(frozen=True)
class Cell:
    id: int
    cls: ContactSet
    box: np.ndarray  # (d, 2)
    label: str
    depth: int


@dataclass(frozen=True)
class Tree:
    split: np.ndarray  # int32, -1 at leaves
    mid: np.ndarray  # int64 split coordinate in finest units
    child: np.ndarray  # int64 index of the first child
    leaf: np.ndarray  # int64 leaf id, -1 at internal nodes


class CellComplex:
    def __init__(self, chart: Chart, eps: float, full, ilo, ihi, label, depth, tree: Tree):
        self.chart = chart
        self.eps = eps
        self.full = full
        self.ilo = ilo
        self.ihi = ihi
        self.label = label
        self.depth = depth
        self.tree = tree
        self.unit = (chart.hi - chart.lo) / full
        self.lo = chart.lo + ilo * self.unit
        self.hi = chart.lo + ihi * self.unit

    @property
    def cls(self) -> ContactSet:
        return self.chart.cs

    def __len__(self) -> int:
        return len(self.label)

    def cell(self, i: int) -> Cell:
        return Cell(
            int(i),
            self.cls,
            np.stack([self.lo[i], self.hi[i]], axis=1),
            LABEL_NAMES[int(self.label[i])],
            int(self.depth[i]),
        )

    @property
    def cells(self) -> list[Cell]:
        return [self.cell(i) for i in range(len(self))]

    @cached_property
    def pairs(self) -> np.ndarray:
        """Unordered facet-adjacent pairs ``(a, b)`` with ``a < b``."""
        return kernels.facet_pairs(
            self.tree, self.ilo, self.ihi, self.full, self.chart.wrap.astype(np.int8)
        )

    @cached_property
    def adjacency(self):
        """Symmetric CSR adjacency matrix over all cells."""
        n = len(self)
        p = self.pairs
        rows = np.concatenate([p[:, 0], p[:, 1]])
        cols = np.concatenate([p[:, 1], p[:, 0]])
        return coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n)).tocsr()

    def neighbors(self, i: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[i] : a.indptr[i + 1]]

    def volume(self, label: int | None = None) -> float:
        vol = np.prod(self.hi - self.lo, axis=1)
        return float(vol.sum() if label is None else vol[self.label == label].sum())

    def to_grid_units(self, v) -> np.ndarray:
        v = np.atleast_2d(np.asarray(v, dtype=float)).copy()
        w = self.chart.wrap
        if w.any():
            v[:, w] = np.mod(v[:, w], 2 * math.pi)
        return (v - self.chart.lo) / self.unit

    def locate(self, v) -> int:
        """Cell containing chart vector ``v``; ties go to the lowest id."""
        u = self.to_grid_units(v)[0]
        if np.any(u < -1e-9) or np.any(u > self.full + 1e-9):
            raise ValueError("point outside chart domain")
        ids = self.query_box(v, v)
        if len(ids):
            return int(ids[0])
        u = np.clip(u, 0, self.full)
        return int(kernels.locate_points(self.tree, u[None, :])[0])

    def locate_many(self, V) -> np.ndarray:
        u = np.clip(self.to_grid_units(V), 0, self.full)
        return kernels.locate_points(self.tree, u)

    def query_box(self, lo, hi) -> np.ndarray:
        """Ids of cells whose closed boxes meet the closed chart box [lo, hi]."""
        ulo = np.floor((np.asarray(lo) - self.chart.lo) / self.unit).astype(np.int64)
        uhi = np.ceil((np.asarray(hi) - self.chart.lo) / self.unit).astype(np.int64)
        ulo = np.clip(ulo - 1, 0, self.full - 1)
        uhi = np.clip(uhi + 1, 1, self.full)
        ids = np.array(kernels.query_leaves(self.tree, ulo, uhi), dtype=np.int64)
        if len(ids) == 0:
            return ids
        ok = np.all(self.lo[ids] <= np.asarray(hi) + 1e-12, axis=1) & np.all(
            self.hi[ids] >= np.asarray(lo) - 1e-12, axis=1
        )
        return np.sort(ids[ok])

    def components(self, leaf_filter=None, exclude=None, labels=(FREE,)) -> np.ndarray:
        """Component index per cell over traversable cells (-1 elsewhere).

        ``leaf_filter`` restricts to cells whose free-object coordinates contain
        the given placement box ``{object index: (xlo, xhi, ylo, yhi)}``.
        Cells listed in ``exclude`` are dropped; ``labels`` selects which cells
        count as traversable.
        """
        keep = np.isin(self.label, labels)
        if exclude:
            keep[list(exclude)] = False
        if leaf_filter:
            for k, (xl, xh, yl, yh) in leaf_filter.items():
                a = self.chart.free_dim[k]
                keep &= (self.lo[:, a] <= xl) & (self.hi[:, a] >= xh)
                keep &= (self.lo[:, a + 1] <= yl) & (self.hi[:, a + 1] >= yh)
        return _components(self.adjacency, keep)

    def to_json_list(self, scene: Scene) -> list[dict]:
        cls = self.cls.ids(scene)
        return [
            {
                "id": int(i),
                "class": cls,
                "box": [[float(a), float(b)] for a, b in zip(self.lo[i], self.hi[i])],
                "label": LABEL_NAMES[int(self.label[i])],
            }
            for i in range(len(self))
        ]


def _components(adjacency, keep: np.ndarray) -> np.ndarray:
    out = np.full(len(keep), -1, dtype=np.int64)
    idx = np.nonzero(keep)[0]
    if len(idx) == 0:
        return out
    sub = adjacency[idx][:, idx]
    _, lab = _cc(sub, directed=False)
    # Renumber by first appearance so results do not depend on scipy internals.
    _, first = np.unique(lab, return_index=True)
    order = np.argsort(np.argsort(first))
    out[idx] = order[lab]
    return out


def finest_levels(chart: Chart, eps: float) -> np.ndarray:
    """Per-dimension number of halvings after which scaled sides drop below eps."""
    span = (chart.hi - chart.lo) * chart.scale
    levels = np.zeros(chart.dim, dtype=np.int64)
    for k, s in enumerate(span):
        L = 0
        while s / (1 << L) >= eps:
            L += 1
        levels[k] = L
    return levels


def decompose(
    scene: Scene,
    cs: ContactSet,
    eps: float,
    leaf: Leaf | None = None,
    max_cells: int | None = None,
) -> CellComplex:
    """Bisect the chart of ``cs`` (or of a leaf) down to resolution ``eps``.

    Undecided boxes are split along their longest scaled side (angles are
    scaled by the contact radius, so all sides are in length units) until every
    scaled side is below ``eps``; they are then labeled MIXED.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    max_cells = max_cells_default() if max_cells is None else max_cells
    chart = Chart(scene, cs, leaf)
    spec = chart.spec
    d = chart.dim
    L = finest_levels(chart, eps)
    full = np.left_shift(np.int64(1), L)
    unit = (chart.hi - chart.lo) / full
    span = (chart.hi - chart.lo) * chart.scale

    f_ilo = np.zeros((1, d), dtype=np.int64)
    f_lev = np.zeros((1, d), dtype=np.int64)
    f_node = np.zeros(1, dtype=np.int64)
    split = [np.array([-1], dtype=np.int32)]
    mid = [np.zeros(1, dtype=np.int64)]
    child = [np.zeros(1, dtype=np.int64)]
    leaf_of = [np.full(1, -1, dtype=np.int64)]
    n_nodes = 1
    out_ilo, out_lev, out_lab, out_node = [], [], [], []
    n_leaves = 0

    while len(f_ilo):
        width = np.right_shift(full[None, :], f_lev)
        lo = chart.lo + f_ilo * unit
        hi = chart.lo + (f_ilo + width) * unit
        lab = spec.classify(lo, hi)
        sw = span[None, :] / np.left_shift(np.int64(1), f_lev)
        k_star = np.argmax(sw, axis=1)
        can_split = sw[np.arange(len(sw)), k_star] >= eps
        do_split = (lab == MIXED) & can_split
        done = ~do_split

        idx_done = np.nonzero(done)[0]
        if len(idx_done):
            out_ilo.append(f_ilo[idx_done])
            out_lev.append(f_lev[idx_done])
            out_lab.append(lab[idx_done])
            out_node.append(f_node[idx_done])
            n_leaves += len(idx_done)

        idx = np.nonzero(do_split)[0]
        if n_leaves + 2 * len(idx) > max_cells:
            raise ResourceCapExceeded(
                f"decomposition of class {cs.label(scene)} exceeds {max_cells} cells at eps={eps}"
            )
        if len(idx) == 0:
            break
        ks = k_star[idx]
        parents = f_node[idx]
        base = n_nodes + 2 * np.arange(len(idx), dtype=np.int64)
        lev = f_lev[idx].copy()
        lev[np.arange(len(idx)), ks] += 1
        half = np.right_shift(full[ks], lev[np.arange(len(idx)), ks])
        ilo0 = f_ilo[idx]
        ilo1 = ilo0.copy()
        ilo1[np.arange(len(idx)), ks] += half

        # Record the split on the parent nodes.
        split_all = np.concatenate(split)
        mid_all = np.concatenate(mid)
        child_all = np.concatenate(child)
        split_all[parents] = ks
        mid_all[parents] = ilo1[np.arange(len(idx)), ks]
        child_all[parents] = base
        split, mid, child = [split_all], [mid_all], [child_all]
        m = 2 * len(idx)
        split.append(np.full(m, -1, dtype=np.int32))
        mid.append(np.zeros(m, dtype=np.int64))
        child.append(np.zeros(m, dtype=np.int64))
        leaf_of.append(np.full(m, -1, dtype=np.int64))
        n_nodes += m

        f_ilo = np.empty((m, d), dtype=np.int64)
        f_ilo[0::2] = ilo0
        f_ilo[1::2] = ilo1
        f_lev = np.repeat(lev, 2, axis=0)
        f_node = np.empty(m, dtype=np.int64)
        f_node[0::2] = base
        f_node[1::2] = base + 1

    ilo = np.concatenate(out_ilo)
    lev = np.concatenate(out_lev)
    labels = np.concatenate(out_lab).astype(np.int8)
    nodes = np.concatenate(out_node)
    leaf_all = np.concatenate(leaf_of)
    leaf_all[nodes] = np.arange(len(nodes))
    tree = Tree(
        np.concatenate(split).astype(np.int32),
        np.concatenate(mid),
        np.concatenate(child),
        leaf_all,
    )
    ihi = ilo + np.right_shift(full[None, :], lev)
    return CellComplex(chart, eps, full, ilo, ihi, labels, lev.sum(axis=1), tree)


def connected_components(complex: CellComplex, leaf_filter=None) -> list[list[int]]:
    """Partition of FREE cells into facet-connected components."""
    comp = complex.components(leaf_filter)
    groups: dict[int, list[int]] = {}
    for i, c in enumerate(comp):
        if c >= 0:
            groups.setdefault(int(c), []).append(i)
    return [groups[c] for c in sorted(groups)]


def locate_cell(complex: CellComplex, cp) -> Cell:
    v = complex.chart.to_vector(cp) if not isinstance(cp, np.ndarray) else cp
    return complex.cell(complex.locate(v))


def dump_complex(scene: Scene, complex: CellComplex) -> str:
    return json.dumps(complex.to_json_list(scene))

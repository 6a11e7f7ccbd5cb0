"""GRASP classes, cylinder refinement, and the manipulation graph.

Nodes are FREE cells of the contact classes with at least one contact. Each
class is decomposed over its full chart (free objects included). A cell's
cylinder bases are the FREE cells of each one-larger class met by its transfer
image, the set where the extra contact forms. Edges:

* TRANSFER between facet-adjacent cells of one class when the shared facet is
  normal to a robot or angle axis, or when the cells share a cylinder base;
* TRANSFER between a cell and each of its cylinder bases;
* TRANSIT between cells whose object placements meet, certified at the center
  of the common placement box by a robot-only decomposition of that leaf.

Classes with more than ``m`` contacts are decomposed too (bases are computed
with all classes present) and then removed with all their adjacency.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as _cc

from .decomposition import FREE, CellComplex, decompose
from .geometry import Scene, segment_admissible
from .strata import TWO_PI, Chart, ContactSet, Leaf, active_contacts

TRANSFER = "TRANSFER"
TRANSIT = "TRANSIT"


class GraphError(ValueError):
    pass


@dataclass
class GraspClass:
    cs: ContactSet
    complex: CellComplex
    # cell id -> {target class: sorted FREE base ids}
    bases: dict[int, dict[ContactSet, tuple[int, ...]]] = field(default_factory=dict)

    def free_cells(self) -> np.ndarray:
        return np.nonzero(self.complex.label == FREE)[0]


def _angle_span(dxl, dxh, dyl, dyh):
    """Angular range ``(lo, hi)`` (hi may exceed 2*pi) of a box seen from the origin."""
    if dxl <= 0 <= dxh and dyl <= 0 <= dyh:
        return 0.0, TWO_PI
    cx, cy = (dxl + dxh) / 2, (dyl + dyh) / 2
    a0 = math.atan2(cy, cx)
    diffs = [
        (math.atan2(y, x) - a0 + math.pi) % TWO_PI - math.pi
        for x, y in itertools.product((dxl, dxh), (dyl, dyh))
    ]
    lo = (a0 + min(diffs)) % TWO_PI
    return lo, lo + (max(diffs) - min(diffs))


def transfer_image(scene: Scene, cx: CellComplex, cell: int, target: ContactSet) -> list[tuple[np.ndarray, np.ndarray]]:
    """Boxes in the chart of ``target`` covering the cell's closure where the extra contact forms."""
    cs = cx.cls
    extra = [k for k in target if k not in cs]
    if len(extra) != 1 or not cs.issubset(target):
        raise GraphError("transfer target must add exactly one contact")
    j = extra[0]
    chart = cx.chart
    lo, hi = cx.lo[cell], cx.hi[cell]
    a = chart.free_dim[j]
    dxl, dxh = lo[a] - hi[0], hi[a] - lo[0]
    dyl, dyh = lo[a + 1] - hi[1], hi[a + 1] - lo[1]
    nx = 0.0 if dxl <= 0 <= dxh else min(abs(dxl), abs(dxh))
    ny = 0.0 if dyl <= 0 <= dyh else min(abs(dyl), abs(dyh))
    dmin = math.hypot(nx, ny)
    dmax = math.hypot(max(abs(dxl), abs(dxh)), max(abs(dyl), abs(dyh)))
    rho = scene.robot_radius + scene.objects[j].radius
    if not dmin <= rho <= dmax:
        return []
    tlo, thi = _angle_span(dxl, dxh, dyl, dyh)
    pieces = [(tlo, min(thi, TWO_PI))]
    if thi > TWO_PI:
        pieces.append((0.0, thi - TWO_PI))
    tchart = Chart(scene, target)
    out = []
    for t0, t1 in pieces:
        blo, bhi = np.empty(tchart.dim), np.empty(tchart.dim)
        blo[0:2], bhi[0:2] = lo[0:2], hi[0:2]
        for k, d in tchart.angle_dim.items():
            if k == j:
                blo[d], bhi[d] = t0, t1
            else:
                blo[d], bhi[d] = lo[chart.angle_dim[k]], hi[chart.angle_dim[k]]
        for k, d in tchart.free_dim.items():
            s = chart.free_dim[k]
            blo[d : d + 2], bhi[d : d + 2] = lo[s : s + 2], hi[s : s + 2]
        out.append((blo, bhi))
    return out


def project_transfer(scene: Scene, cx: CellComplex, cell: int, target: CellComplex) -> tuple[int, ...]:
    """FREE cells of ``target`` met by the transfer image of ``cell``."""
    ids: set[int] = set()
    for lo, hi in transfer_image(scene, cx, cell, target.cls):
        found = target.query_box(lo, hi)
        ids.update(int(i) for i in found[target.label[found] == FREE])
    return tuple(sorted(ids))


def decompose_classes(scene: Scene, eps: float, max_cells: int | None = None) -> dict[ContactSet, GraspClass]:
    """Decompose every class with at least one contact, all ``n`` included."""
    out = {}
    for p in range(1, scene.n + 1):
        for combo in itertools.combinations(range(scene.n), p):
            cs = ContactSet(combo)
            out[cs] = GraspClass(cs, decompose(scene, cs, eps, max_cells=max_cells))
    return out


def refine(scene: Scene, classes: dict[ContactSet, GraspClass]) -> dict[ContactSet, GraspClass]:
    """Record the cylinder bases of every FREE cell in each one-larger class.

    Cells are not split; a cell lying over several bases keeps all of them and
    adjacency tests ask for a shared one.
    """
    for cs, gc in classes.items():
        targets = [classes[cs.with_(j)] for j in range(scene.n) if j not in cs]
        gc.bases = {}
        for c in gc.free_cells():
            gc.bases[int(c)] = {t.cs: project_transfer(scene, gc.complex, int(c), t.complex) for t in targets}
    return classes


def _facet_axis(cx: CellComplex, a: int, b: int) -> int | None:
    """Axis normal to the facet shared by cells ``a`` and ``b``, if any."""
    ilo, ihi, full, wrap = cx.ilo, cx.ihi, cx.full, cx.chart.wrap
    axis = None
    for k in range(len(full)):
        overlap = min(ihi[a, k], ihi[b, k]) - max(ilo[a, k], ilo[b, k])
        if overlap > 0:
            continue
        seam = wrap[k] and (
            (ihi[a, k] == full[k] and ilo[b, k] == 0) or (ihi[b, k] == full[k] and ilo[a, k] == 0)
        )
        if (overlap < 0 and not seam) or axis is not None:
            return None
        axis = k
    return axis


class ManipulationGraph:
    """Refined FREE cells of all classes with ``p <= m`` and their adjacency."""

    def __init__(self, scene: Scene, eps: float, m: int, classes: dict[ContactSet, GraspClass]):
        self.scene = scene
        self.eps = eps
        self.m = m
        self.classes = classes
        self.kept = [cs for cs in sorted(classes, key=lambda c: (c.p, c.members)) if cs.p <= m]
        self.nodes: list[tuple[ContactSet, int]] = []
        self.index: dict[tuple[ContactSet, int], int] = {}
        for cs in self.kept:
            for c in classes[cs].free_cells():
                self.index[(cs, int(c))] = len(self.nodes)
                self.nodes.append((cs, int(c)))
        self.edges: list[tuple[int, int, str, dict]] = []
        self._robot_leaves: dict[tuple, tuple[CellComplex, np.ndarray]] = {}
        self._memo: dict = {}

    # --- adjacency -----------------------------------------------------------

    def _bases(self, cs: ContactSet, c: int, target: ContactSet) -> tuple[int, ...]:
        return self.classes[cs].bases.get(c, {}).get(target, ())

    def transfer_adjacent(self, n1: tuple[ContactSet, int], n2: tuple[ContactSet, int]) -> bool:
        key = (n1, n2) if (n1[0].members, n1[1]) <= (n2[0].members, n2[1]) else (n2, n1)
        if key not in self._memo:
            self._memo[key] = self._transfer_adjacent(*key)
        return self._memo[key]

    def _transfer_adjacent(self, n1, n2) -> bool:
        (cs1, a), (cs2, b) = n1, n2
        if cs1.p > self.m or cs2.p > self.m:
            return False
        if cs1 == cs2:
            if a == b:
                return False
            cx = self.classes[cs1].complex
            if cx.label[a] != FREE or cx.label[b] != FREE:
                return False
            axis = _facet_axis(cx, a, b)
            if axis is None:
                return False
            if axis < 2 or axis in cx.chart.angle_dim.values():
                return True
            for target, ids in self.classes[cs1].bases.get(a, {}).items():
                if target.p <= self.m and set(ids) & set(self._bases(cs1, b, target)):
                    return True
            return False
        if cs1.issubset(cs2) and cs2.p == cs1.p + 1:
            return b in self._bases(cs1, a, cs2)
        if cs2.issubset(cs1) and cs1.p == cs2.p + 1:
            return a in self._bases(cs2, b, cs1)
        union = ContactSet(tuple(sorted(set(cs1.members) | set(cs2.members))))
        if union.p > self.m:
            return False
        pa = self._project_to(cs1, a, union)
        pb = self._project_to(cs2, b, union)
        return any(x == y or self.transfer_adjacent((union, x), (union, y)) for x in pa for y in pb)

    def _project_to(self, cs: ContactSet, c: int, target: ContactSet) -> set[int]:
        cells = {c}
        cur = cs
        for j in target:
            if j in cur:
                continue
            nxt = cur.with_(j)
            cells = {x for y in cells for x in self._bases(cur, y, nxt)}
            cur = nxt
        return cells

    def placement_box(self, node) -> np.ndarray:
        """``(n, 4)`` boxes ``[xlo, xhi, ylo, yhi]`` of every object placement over the cell."""
        cs, c = node
        cx = self.classes[cs].complex
        lo, hi = cx.lo[c], cx.hi[c]
        out = np.empty((self.scene.n, 4))
        R = self.scene.robot_radius
        for k in range(self.scene.n):
            if k in cx.chart.angle_dim:
                d = cx.chart.angle_dim[k]
                rho = R + self.scene.objects[k].radius
                (clo, chi), (slo, shi) = _trig_box(lo[d], hi[d])
                out[k] = (lo[0] + rho * clo, hi[0] + rho * chi, lo[1] + rho * slo, hi[1] + rho * shi)
            else:
                d = cx.chart.free_dim[k]
                out[k] = (lo[d], hi[d], lo[d + 1], hi[d + 1])
        return out

    def _grasp_positions(self, node, w: np.ndarray) -> list[np.ndarray]:
        """Robot positions placing the cell's contacts exactly at ``w`` inside the cell."""
        cs, c = node
        cx = self.classes[cs].complex
        lo, hi = cx.lo[c], cx.hi[c]
        R = self.scene.robot_radius
        ks = list(cs)
        rho = {k: R + self.scene.objects[k].radius for k in ks}
        cands = []
        k0 = ks[0]
        if len(ks) == 1:
            d = cx.chart.angle_dim[k0]
            for th in (lo[d] + hi[d]) / 2 + (hi[d] - lo[d]) * np.array([0, -0.25, 0.25, -0.5, 0.5]):
                cands.append(w[k0] - rho[k0] * np.array([math.cos(th), math.sin(th)]))
        else:
            k1 = ks[1]
            cands.extend(_circle_intersections(w[k0], rho[k0], w[k1], rho[k1]))
        out = []
        for r in cands:
            if np.any(r < lo[0:2] - 1e-12) or np.any(r > hi[0:2] + 1e-12):
                continue
            ok = True
            for k in ks:
                off = w[k] - r
                if abs(math.hypot(*off) - rho[k]) > 1e-9:
                    ok = False
                    break
                th = math.atan2(off[1], off[0]) % TWO_PI
                d = cx.chart.angle_dim[k]
                if not (lo[d] - 1e-12 <= th <= hi[d] + 1e-12 or (hi[d] >= TWO_PI - 1e-12 and th < 1e-12)):
                    ok = False
                    break
            if ok:
                out.append(r)
        return out

    def _robot_leaf(self, w: np.ndarray):
        key = tuple(np.round(w, 12).ravel())
        if key not in self._robot_leaves:
            leaf = Leaf.of(ContactSet(()), {k: tuple(w[k]) for k in range(self.scene.n)})
            cx = decompose(self.scene, ContactSet(()), self.eps, leaf=leaf)
            self._robot_leaves[key] = (cx, cx.components())
        return self._robot_leaves[key]

    def _robot_component(self, w: np.ndarray, node, r: np.ndarray):
        """Component of the robot leaf reached by backing the robot off its contacts."""
        cs = node[0]
        away = sum(r - w[k] for k in cs)
        norm = float(np.hypot(*away))
        if norm < 1e-12:
            return None, None
        u = away / norm
        q = np.concatenate([r, w.ravel()])
        cx, comp = self._robot_leaf(w)
        for delta in (self.eps / 8, self.eps / 4, self.eps / 2):
            r2 = r + delta * u
            q2 = q.copy()
            q2[0:2] = r2
            if not segment_admissible(self.scene, q, q2):
                continue
            try:
                c = cx.locate(r2)
            except ValueError:
                continue
            if comp[c] >= 0:
                return int(comp[c]), r2
        return None, None

    def _samples(self, node) -> np.ndarray:
        """Cell center plus quarter points along each angle axis, embedded."""
        cs, c = node
        cx = self.classes[cs].complex
        lo, hi = cx.lo[c], cx.hi[c]
        pts = [(lo + hi) / 2]
        for d in cx.chart.angle_dim.values():
            for t in (0.25, 0.75):
                v = (lo + hi) / 2
                v[d] = lo[d] + t * (hi[d] - lo[d])
                pts.append(v)
        return cx.chart.embed_many(np.array(pts))[:, 2:].reshape(len(pts), -1, 2)

    def _witness_candidates(self, n1, n2, center: np.ndarray):
        yield center
        s1, s2 = self._samples(n1), self._samples(n2)
        for a in s1:
            for b in s2:
                w = center.copy()
                for k in n2[0]:
                    w[k] = b[k]
                for k in n1[0]:
                    w[k] = a[k]
                yield w

    def transit_witness(self, n1, n2) -> dict | None:
        """Witness placement and backed-off robot positions, or None.

        The center of the common placement box is tried first; placements read
        off sample points of either cell are tried when it is unattainable.
        """
        b1, b2 = self.placement_box(n1), self.placement_box(n2)
        lo = np.maximum(b1[:, [0, 2]], b2[:, [0, 2]])
        hi = np.minimum(b1[:, [1, 3]], b2[:, [1, 3]])
        if np.any(lo > hi):
            return None
        for w in self._witness_candidates(n1, n2, (lo + hi) / 2):
            if np.any(w < lo - 1e-12) or np.any(w > hi + 1e-12):
                continue
            ends = []
            for node in (n1, n2):
                for r in self._grasp_positions(node, w):
                    comp, r2 = self._robot_component(w, node, r)
                    if comp is not None:
                        ends.append((comp, r2))
                        break
                else:
                    break
            if len(ends) == 2 and ends[0][0] == ends[1][0]:
                return {
                    "placement": [[float(x), float(y)] for x, y in w],
                    "robot": [[float(v) for v in e[1]] for e in ends],
                }
        return None

    def transit_adjacent(self, n1, n2) -> bool:
        if n1[0].p > self.m or n2[0].p > self.m:
            return False
        if n1 == n2:
            return False
        a, b = sorted([n1, n2], key=lambda t: (t[0].members, t[1]))
        return self.transit_witness(a, b) is not None

    # --- assembly -------------------------------------------------------------

    def build(self, all_transit: bool = False) -> "ManipulationGraph":
        """Add edges. Transit tests are skipped for pairs already connected
        unless ``all_transit``."""
        uf = list(range(len(self.nodes)))

        def find(x):
            while uf[x] != x:
                uf[x] = uf[uf[x]]
                x = uf[x]
            return x

        def add(a, b, kind, witness):
            a, b = min(a, b), max(a, b)
            self.edges.append((a, b, kind, witness))
            ra, rb = find(a), find(b)
            if ra != rb:
                uf[max(ra, rb)] = min(ra, rb)

        for cs in self.kept:
            gc = self.classes[cs]
            cx = gc.complex
            for a, b in cx.pairs:
                a, b = int(a), int(b)
                if cx.label[a] == FREE and cx.label[b] == FREE and self.transfer_adjacent((cs, a), (cs, b)):
                    add(self.index[(cs, a)], self.index[(cs, b)], TRANSFER, {"facet": True})
            for c in gc.free_cells():
                for target, ids in gc.bases.get(int(c), {}).items():
                    if target.p > self.m:
                        continue
                    for b in ids:
                        add(self.index[(cs, int(c))], self.index[(target, b)], TRANSFER, {"base": [target.ids(self.scene), b]})

        boxes = np.array([self.placement_box(nd) for nd in self.nodes]) if self.nodes else np.zeros((0, self.scene.n, 4))
        for i, j in _overlapping_pairs(boxes):
            if not all_transit and find(i) == find(j):
                continue
            wit = self.transit_witness(self.nodes[i], self.nodes[j])
            if wit is not None:
                add(i, j, TRANSIT, wit)
        self.edges.sort(key=lambda e: (e[0], e[1], e[2]))
        return self

    def components(self) -> np.ndarray:
        n = len(self.nodes)
        if n == 0:
            return np.zeros(0, dtype=np.int64)
        e = np.array([(a, b) for a, b, _, _ in self.edges], dtype=np.int64).reshape(-1, 2)
        adj = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
        _, lab = _cc(adj, directed=False)
        # Renumber by first appearance.
        remap: dict[int, int] = {}
        return np.array([remap.setdefault(int(x), len(remap)) for x in lab], dtype=np.int64)

    def node_at(self, q) -> int | None:
        """Node whose cell contains configuration ``q`` (contact endpoints only)."""
        cs = active_contacts(self.scene, q)
        if cs.p == 0 or cs not in self.classes or cs.p > self.m:
            return None
        cx = self.classes[cs].complex
        c = cx.locate(cx.chart.project(q))
        return self.index.get((cs, c))

    def to_dict(self) -> dict:
        nodes = []
        for i, (cs, c) in enumerate(self.nodes):
            cx = self.classes[cs].complex
            nodes.append(
                {
                    "id": i,
                    "class": cs.ids(self.scene),
                    "box": [[float(a), float(b)] for a, b in zip(cx.lo[c], cx.hi[c])],
                }
            )
        edges = [{"a": a, "b": b, "kind": k, "witness": w} for a, b, k, w in self.edges]
        return {"nodes": nodes, "edges": edges}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _trig_box(tlo: float, thi: float):
    """Ranges of cos and sin over ``[tlo, thi]``."""
    ts = [tlo, thi]
    k = math.ceil(tlo / (math.pi / 2))
    while k * math.pi / 2 <= thi:
        ts.append(k * math.pi / 2)
        k += 1
    c = [math.cos(t) for t in ts]
    s = [math.sin(t) for t in ts]
    return (min(c), max(c)), (min(s), max(s))


def _circle_intersections(c0, r0, c1, r1) -> list[np.ndarray]:
    c0, c1 = np.asarray(c0, dtype=float), np.asarray(c1, dtype=float)
    d = float(np.hypot(*(c1 - c0)))
    if d == 0 or d > r0 + r1 or d < abs(r0 - r1):
        return []
    a = (r0 * r0 - r1 * r1 + d * d) / (2 * d)
    h = math.sqrt(max(r0 * r0 - a * a, 0.0))
    u = (c1 - c0) / d
    p = c0 + a * u
    perp = np.array([-u[1], u[0]])
    return [p + h * perp, p - h * perp]


def _overlapping_pairs(boxes: np.ndarray):
    """Index pairs ``i < j`` whose placement boxes meet for every object."""
    n = len(boxes)
    if n == 0:
        return
    xlo = boxes[:, 0, 0]
    order = np.argsort(xlo, kind="stable")
    sorted_lo = xlo[order]
    for pos, i in enumerate(order):
        stop = np.searchsorted(sorted_lo, boxes[i, 0, 1], side="right")
        js = order[pos + 1 : stop]
        if len(js) == 0:
            continue
        bi = boxes[i]
        bj = boxes[js]
        ok = np.all((bj[:, :, 0] <= bi[:, 1]) & (bj[:, :, 1] >= bi[:, 0]), axis=1)
        ok &= np.all((bj[:, :, 2] <= bi[:, 3]) & (bj[:, :, 3] >= bi[:, 2]), axis=1)
        for j in sorted(int(x) for x in js[ok]):
            yield (min(int(i), j), max(int(i), j))


def build_graph(
    scene: Scene, eps: float, m: int, max_cells: int | None = None, all_transit: bool = False
) -> ManipulationGraph:
    """Decompose all classes, refine, connect, and drop classes with more than ``m`` contacts."""
    if not 1 <= m <= scene.n:
        raise GraphError(f"m must be in 1..{scene.n}, got {m}")
    classes = refine(scene, decompose_classes(scene, eps, max_cells))
    return ManipulationGraph(scene, eps, m, classes).build(all_transit)

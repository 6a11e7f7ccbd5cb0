"""Query answering by best-first search over certified cells of contact leaves.

A search state is a FREE cell of a leaf: a contact class with every
non-contacted object frozen at a placement. Leaves are decomposed on demand.
Three kinds of moves connect states:

* facet moves between adjacent FREE cells of one leaf,
* releases, which leave one contacted object at a placement and back the
  robot (with the remaining contacted objects) away from it,
* grasps, the reverse of releases, looked up so that both directions agree.

Release placements are drawn from a dyadic lattice anchored at the workspace
corner plus the start and goal placements, so leaves reached from different
cells coincide and the set of leaves stays finite.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .decomposition import FREE, MIXED, CellComplex, decompose, max_cells_default
from .geometry import Scene, is_admissible, segment_admissible
from .paths import ManipulationPath, PathBuilder, ReductionError, reduce_contact_path, validate
from .strata import Leaf, active_contacts

SOLVED = "SOLVED"
UNSOLVABLE = "UNSOLVABLE"
UNKNOWN = "UNKNOWN"

DEFAULT_K_ATTACH = 64
MAX_REPAIRS = 20


class QueryError(ValueError):
    pass


@dataclass(frozen=True)
class Query:
    start: np.ndarray
    goal: np.ndarray
    m: int

    def check(self, scene: Scene) -> None:
        for name, q in (("start", self.start), ("goal", self.goal)):
            if len(q) != scene.dim:
                raise QueryError(f"{name} has {len(q)} coordinates, scene needs {scene.dim}")
            if not is_admissible(scene, q):
                raise QueryError(f"{name} configuration is not admissible")
        if not 1 <= self.m <= scene.n:
            raise QueryError(f"m must be in 1..{scene.n}, got {self.m}")


@dataclass
class PlanOutcome:
    kind: str
    path: ManipulationPath | None = None
    reason: str = ""
    stats: dict = field(default_factory=dict)

    def to_dict(self, scene: Scene) -> dict:
        doc = {"outcome": self.kind}
        if self.reason:
            doc["reason"] = self.reason
        if self.path is not None:
            body = self.path.to_dict(scene)
            doc["start"] = body["start"]
            doc["segments"] = body["segments"]
        else:
            doc["segments"] = []
        doc["stats"] = self.stats
        return doc


# --- helpers ----------------------------------------------------------------


def _unit(th: float) -> np.ndarray:
    return np.array([math.cos(th), math.sin(th)])


def _translate(q, bodies, delta) -> np.ndarray:
    out = np.array(q, dtype=float)
    for b in bodies:
        out[2 * b : 2 * b + 2] += delta
    return out


def _trig_range(tlo: float, thi: float):
    """Min/max of cos and sin over [tlo, thi]."""
    ts = [tlo, thi]
    k = math.ceil(tlo / (math.pi / 2))
    while k * math.pi / 2 <= thi:
        ts.append(k * math.pi / 2)
        k += 1
    c = [math.cos(t) for t in ts]
    s = [math.sin(t) for t in ts]
    return min(c), max(c), min(s), max(s)


def _circ_dist(a: float, b: float) -> float:
    d = abs(a - b) % (2 * math.pi)
    return min(d, 2 * math.pi - d)


@dataclass(frozen=True)
class Release:
    """Witness for a release edge between a contact cell and a landing cell."""

    src: tuple  # (Leaf, cell)
    dst: tuple  # (Leaf, cell)
    obj: int
    v_contact: np.ndarray  # chart point in the source cell
    q_contact: np.ndarray  # configuration with the object exactly at its placement
    v_land: np.ndarray
    q_land: np.ndarray


class Atlas:
    """Lazily decomposed leaves sharing one cell budget."""

    def __init__(self, scene: Scene, eps: float, max_cells: int | None = None):
        self.scene = scene
        self.eps = eps
        self.max_cells = max_cells_default() if max_cells is None else max_cells
        self.complexes: dict[Leaf, CellComplex] = {}
        self.total_cells = 0

    def complex(self, leaf: Leaf) -> CellComplex:
        cx = self.complexes.get(leaf)
        if cx is None:
            cx = decompose(self.scene, leaf.cs, self.eps, leaf, max_cells=self.max_cells - self.total_cells)
            self.total_cells += len(cx)
            self.complexes[leaf] = cx
        return cx

    def cell_at(self, leaf: Leaf, v, labels=(FREE,)) -> int | None:
        """Lowest-id cell with a label in ``labels`` whose closed box holds ``v``."""
        cx = self.complex(leaf)
        ids = [int(i) for i in cx.query_box(v, v) if cx.label[i] in labels]
        return min(ids) if ids else None

    def center(self, state) -> np.ndarray:
        leaf, c = state
        cx = self.complex(leaf)
        return 0.5 * (cx.lo[c] + cx.hi[c])


class Planner:
    def __init__(
        self,
        scene: Scene,
        eps: float,
        m: int,
        special=(),
        max_cells: int | None = None,
        k_attach: int = DEFAULT_K_ATTACH,
        optimistic: bool = False,
        atlas: Atlas | None = None,
    ):
        if not eps > 0:
            raise ValueError("eps must be positive")
        self.scene = scene
        self.eps = eps
        self.m = m
        self.k_attach = k_attach
        # Optimistic planners also walk through MIXED cells and skip exact
        # segment checks; they only answer whether a connection might exist.
        self.optimistic = optimistic
        self.labels = (FREE, MIXED) if optimistic else (FREE,)
        self.atlas = atlas if atlas is not None else Atlas(scene, eps, max_cells)
        self.step = eps / 2
        self.origin = np.array(scene.workspace[:2], dtype=float)
        # Start/goal placements per object, used as extra release placements.
        self.special: dict[int, list[tuple[float, float]]] = {k: [] for k in range(scene.n)}
        for q in special:
            for k in range(scene.n):
                w = (float(q[2 + 2 * k]), float(q[3 + 2 * k]))
                if w not in self.special[k]:
                    self.special[k].append(w)
        self._cand: dict = {}
        self._release: dict = {}
        self._by_w: dict = {}
        self._grasps: dict = {}
        self.banned_cells: dict[Leaf, set[int]] = {}
        self._comp: dict = {}
        self._members: dict = {}
        self.goal_placements: dict | None = None

    # --- releases and grasps ------------------------------------------------

    def hull(self, leaf: Leaf, c: int, i: int):
        """Bounding box of object ``i`` placements over cell ``c``."""
        cx = self.atlas.complex(leaf)
        a = cx.chart.angle_dim[i]
        lo, hi = cx.lo[c], cx.hi[c]
        rho = self.scene.robot_radius + self.scene.objects[i].radius
        cmin, cmax, smin, smax = _trig_range(lo[a], hi[a])
        r_i = self.scene.objects[i].radius
        xmin, ymin, xmax, ymax = self.scene.workspace
        hx = (max(lo[0] + rho * cmin, xmin + r_i), min(hi[0] + rho * cmax, xmax - r_i))
        hy = (max(lo[1] + rho * smin, ymin + r_i), min(hi[1] + rho * smax, ymax - r_i))
        return hx, hy

    def candidates(self, leaf: Leaf, c: int, i: int) -> list[tuple[float, float]]:
        key = (leaf, c, i)
        out = self._cand.get(key)
        if out is not None:
            return out
        hx, hy = self.hull(leaf, c, i)
        out = []
        if hx[0] <= hx[1] and hy[0] <= hy[1]:
            for w in self.special[i]:
                if hx[0] <= w[0] <= hx[1] and hy[0] <= w[1] <= hy[1]:
                    out.append(w)
            size = max(hx[1] - hx[0], hy[1] - hy[0], 1e-12)
            stride = 1 << max(0, math.ceil(math.log2(size / (4 * self.step))))
            s = self.step
            kx0 = math.ceil((hx[0] - self.origin[0]) / s / stride) * stride
            ky0 = math.ceil((hy[0] - self.origin[1]) / s / stride) * stride
            kx = kx0
            while self.origin[0] + kx * s <= hx[1]:
                ky = ky0
                while self.origin[1] + ky * s <= hy[1]:
                    w = (float(self.origin[0] + kx * s), float(self.origin[1] + ky * s))
                    if w not in out:
                        out.append(w)
                    ky += stride
                kx += stride
        self._cand[key] = out
        return out

    def _contact_vector(self, cx: CellComplex, c: int, i: int, w) -> np.ndarray | None:
        """Point of cell ``c`` whose object ``i`` sits exactly at ``w``."""
        chart = cx.chart
        a = chart.angle_dim[i]
        lo, hi = cx.lo[c], cx.hi[c]
        rho = self.scene.robot_radius + self.scene.objects[i].radius
        rc = 0.5 * (lo[0:2] + hi[0:2])
        target = math.atan2(w[1] - rc[1], w[0] - rc[0]) % (2 * math.pi)
        thetas = [min(max(target, lo[a]), hi[a])]
        for t in (target - 2 * math.pi, target + 2 * math.pi):
            thetas.append(min(max(t, lo[a]), hi[a]))
        thetas += list(np.linspace(lo[a], hi[a], 9))
        thetas.sort(key=lambda t: _circ_dist(t, target))
        for th in thetas:
            r = np.asarray(w) - rho * _unit(th)
            if lo[0] <= r[0] <= hi[0] and lo[1] <= r[1] <= hi[1]:
                v = 0.5 * (lo + hi)
                v[0:2] = r
                v[a] = th
                return v
        return None

    def release(self, leaf: Leaf, c: int, i: int, w) -> Release | None:
        key = (leaf, c, i, w)
        if key in self._release:
            return self._release[key]
        out = None
        cx = self.atlas.complex(leaf)
        v = self._contact_vector(cx, c, i, w)
        if v is not None:
            q = cx.chart.embed_vector(v)
            q[2 + 2 * i : 4 + 2 * i] = w
            others = leaf.cs.without(i)
            leaf2 = Leaf.of(others, {**leaf.placement_map, i: w})
            u = _unit(v[cx.chart.angle_dim[i]])
            bodies = [0] + [k + 1 for k in others]
            for delta in (self.eps / 8, self.eps / 4, self.eps / 2):
                q2 = _translate(q, bodies, -delta * u)
                if not self.optimistic and not segment_admissible(self.scene, q, q2):
                    continue
                cx2 = self.atlas.complex(leaf2)
                v2 = cx2.chart.project(q2)
                c2 = self.atlas.cell_at(leaf2, v2, self.labels)
                if c2 is not None:
                    out = Release((leaf, c), (leaf2, c2), i, v, q, v2, q2)
                    break
        self._release[key] = out
        return out

    def releases_from(self, state):
        leaf, c = state
        for i in leaf.cs:
            for w in self.candidates(leaf, c, i):
                mv = self.release(leaf, c, i, w)
                if mv is not None:
                    yield mv

    def _cells_by_placement(self, leaf: Leaf, i: int) -> dict:
        key = (leaf, i)
        idx = self._by_w.get(key)
        if idx is None:
            idx = {}
            cx = self.atlas.complex(leaf)
            for c in np.nonzero(np.isin(cx.label, self.labels))[0]:
                for w in self.candidates(leaf, int(c), i):
                    idx.setdefault(w, []).append(int(c))
            self._by_w[key] = idx
        return idx

    def _grasp_map(self, leaf2: Leaf, i: int) -> dict:
        """Landing cell of ``leaf2`` -> releases of object ``i`` ending there."""
        key = (leaf2, i)
        out = self._grasps.get(key)
        if out is None:
            placements = leaf2.placement_map
            w = placements[i]
            leaf = Leaf.of(leaf2.cs.with_(i), {k: p for k, p in placements.items() if k != i})
            out = {}
            for c in self._cells_by_placement(leaf, i).get(w, ()):
                mv = self.release(leaf, c, i, w)
                if mv is not None and mv.dst[0] == leaf2:
                    out.setdefault(mv.dst[1], []).append(mv)
            self._grasps[key] = out
        return out

    def grasps_into(self, state):
        """Releases (to be run backwards) that land in ``state``."""
        leaf2, c2 = state
        if leaf2.cs.p >= self.m:
            return
        for i, _, _ in leaf2.placements:
            yield from self._grasp_map(leaf2, i).get(c2, ())

    # --- endpoints ------------------------------------------------------------

    def endpoint(self, q, is_goal: bool):
        """States an endpoint connects to, each with the motion joining them.

        Motions are lists of ``("chart", leaf, [points])`` and
        ``("q", held, config)`` items, running from the endpoint to the state
        (or from the state to the endpoint when ``is_goal``). The flag reports
        whether the endpoint lies in a FREE cell of its own class. Endpoints
        touching more than ``m`` objects belong to a removed class and get no
        attachments.
        """
        q = np.asarray(q, dtype=float)
        cs = active_contacts(self.scene, q)
        leaf = Leaf.through(self.scene, cs, q)
        cx = self.atlas.complex(leaf)
        v = cx.chart.project(q)
        certified = self.atlas.cell_at(leaf, v) is not None
        attach: dict = {}
        if cs.p > self.m:
            return attach, certified

        def add(state, fwd):
            if state not in attach:
                attach[state] = fwd

        own = self.atlas.cell_at(leaf, v, self.labels)
        if own is not None:
            ctr = self.atlas.center((leaf, own))
            add((leaf, own), [("chart", leaf, [v, ctr])] if not is_goal else [("chart", leaf, [ctr, v])])
        else:
            for c, t in self._nearest_free(cx, v):
                qt = cx.chart.embed_vector(t)
                if not segment_admissible(self.scene, q, qt):
                    continue
                ctr = self.atlas.center((leaf, c))
                if is_goal:
                    add((leaf, c), [("chart", leaf, [ctr, t]), ("q", cs.members, q)])
                else:
                    add((leaf, c), [("q", cs.members, qt), ("chart", leaf, [t, ctr])])
        for i in cs:
            others = cs.without(i)
            leaf2 = Leaf.through(self.scene, others, q)
            th = v[cx.chart.angle_dim[i]]
            bodies = [0] + [k + 1 for k in others]
            for delta in (self.eps / 8, self.eps / 4, self.eps / 2):
                q2 = _translate(q, bodies, -delta * _unit(th))
                if not self.optimistic and not segment_admissible(self.scene, q, q2):
                    continue
                cx2 = self.atlas.complex(leaf2)
                v2 = cx2.chart.project(q2)
                c2 = self.atlas.cell_at(leaf2, v2, self.labels)
                if c2 is None:
                    continue
                ctr = self.atlas.center((leaf2, c2))
                if is_goal:
                    add((leaf2, c2), [("chart", leaf2, [ctr, v2]), ("q", others.members, q)])
                else:
                    add((leaf2, c2), [("q", others.members, q2), ("chart", leaf2, [v2, ctr])])
                break
        return attach, certified

    def _nearest_free(self, cx: CellComplex, v):
        """Up to K FREE cells reachable from ``v`` with contact angles unchanged."""
        chart = cx.chart
        free = np.nonzero(cx.label == FREE)[0]
        if len(free) == 0:
            return []
        lo, hi = cx.lo[free], cx.hi[free]
        ang = list(chart.angle_dim.values())
        ok = np.ones(len(free), dtype=bool)
        for a in ang:
            ok &= (lo[:, a] <= v[a]) & (v[a] <= hi[:, a])
        free, lo, hi = free[ok], lo[ok], hi[ok]
        t = np.clip(v[None, :], lo, hi)
        d = np.abs(t - v[None, :])[:, 0:2].max(axis=1) if len(free) else np.zeros(0)
        order = np.lexsort((free, d))[: self.k_attach]
        return [(int(free[j]), t[j]) for j in order]

    # --- component graph ------------------------------------------------------

    def components(self, leaf: Leaf) -> np.ndarray:
        comp = self._comp.get(leaf)
        if comp is None:
            cx = self.atlas.complex(leaf)
            comp = cx.components(exclude=self.banned_cells.get(leaf), labels=self.labels)
            self._comp[leaf] = comp
            members: dict[int, list[int]] = {}
            for c in np.nonzero(comp >= 0)[0]:
                members.setdefault(int(comp[c]), []).append(int(c))
            self._members[leaf] = members
        return comp

    def node_of(self, state):
        leaf, c = state
        k = int(self.components(leaf)[c])
        return (leaf, k) if k >= 0 else None

    def members(self, node) -> list[int]:
        leaf, k = node
        self.components(leaf)
        return self._members[leaf][k]

    def ban(self, leaf: Leaf, c: int) -> None:
        self.banned_cells.setdefault(leaf, set()).add(int(c))
        self._comp.pop(leaf, None)
        self._members.pop(leaf, None)

    def heuristic(self, leaf: Leaf) -> float:
        """Distance of the placed objects from their goal placements."""
        if self.goal_placements is None:
            return 0.0
        return float(
            sum(math.dist((x, y), self.goal_placements[k]) for k, x, y in leaf.placements)
        )

    def search(self, start_attach: dict, goal_attach: dict, budget: int | None = None):
        """Greedy best-first search over leaf components.

        Expansion is lazy: releases are grouped per (object, placement) and
        grasps per object, and only resolved when popped. Every reachable node
        is eventually expanded, so an exhausted queue proves there is no
        connection at this resolution.
        """
        goal_nodes = {}
        for st in goal_attach:
            nd = self.node_of(st)
            if nd is not None:
                goal_nodes.setdefault(nd, st)
        parent: dict = {}
        heap: list = []
        counter = 0

        def push(prio, item):
            nonlocal counter
            heapq.heappush(heap, (prio, counter, item))
            counter += 1

        def reach(node, via):
            if node in parent:
                return False
            parent[node] = via
            push(self.heuristic(node[0]), ("node", node))
            return node in goal_nodes

        found = None
        for st in start_attach:
            nd = self.node_of(st)
            if nd is not None and nd not in parent:
                if reach(nd, ("start", st)):
                    found = nd
                    break
        expanded = 0
        while heap and found is None:
            _, _, item = heapq.heappop(heap)
            kind = item[0]
            if kind == "node":
                node = item[1]
                expanded += 1
                if budget is not None and expanded > budget:
                    return None, len(parent), False
                leaf = node[0]
                if 1 <= leaf.cs.p <= self.m:
                    groups: dict = {}
                    for c in self.members(node):
                        for i in leaf.cs:
                            for w in self.candidates(leaf, c, i):
                                groups.setdefault((i, w), []).append(c)
                    placements = leaf.placement_map
                    for (i, w), cells in groups.items():
                        h = self.heuristic(Leaf.of(leaf.cs.without(i), {**placements, i: w}))
                        push(h, ("release", node, i, w, cells))
                if leaf.cs.p < self.m:
                    placements = leaf.placement_map
                    for i in sorted(placements):
                        h = self.heuristic(Leaf.of(leaf.cs.with_(i), {k: p for k, p in placements.items() if k != i}))
                        push(h, ("grasp", node, i))
            elif kind == "release":
                _, node, i, w, cells = item
                for c in cells:
                    mv = self.release(node[0], c, i, w)
                    if mv is None:
                        continue
                    nd = self.node_of(mv.dst)
                    if nd is not None and reach(nd, ("release", node, mv)):
                        found = nd
                        break
            else:
                _, node, i = item
                gm = self._grasp_map(node[0], i)
                for c in self.members(node):
                    for mv in gm.get(c, ()):
                        nd = self.node_of(mv.src)
                        if nd is not None and reach(nd, ("grasp", node, mv)):
                            found = nd
                            break
                    if found is not None:
                        break
        if found is None:
            return None, len(parent), True
        chain = []
        node = found
        while True:
            via = parent[node]
            chain.append((node, via))
            if via[0] == "start":
                break
            node = via[1]
        chain.reverse()
        return (chain, goal_nodes[found]), len(parent), True

    def cell_path(self, node, a: int, b: int) -> list[int]:
        """Shortest facet path between two cells of a component."""
        leaf = node[0]
        cx = self.atlas.complex(leaf)
        comp = self.components(leaf)
        prev = {a: None}
        queue = deque([a])
        while queue:
            x = queue.popleft()
            if x == b:
                break
            for y in cx.neighbors(x):
                y = int(y)
                if y not in prev and comp[y] == node[1]:
                    prev[y] = x
                    queue.append(y)
        out = [b]
        while prev[out[-1]] is not None:
            out.append(prev[out[-1]])
        return out[::-1]

    def motion(self, chain, goal_state, start_attach, goal_attach) -> list:
        """Pieces ``(owner, item)`` realizing a node chain."""
        pieces = []
        entry = chain[0][1][1]
        pieces += [("start", it) for it in start_attach[entry]]
        for j, (node, via) in enumerate(chain):
            leaf = node[0]
            if j + 1 < len(chain):
                nvia = chain[j + 1][1]
                mv = nvia[2]
                exit_state = mv.src if nvia[0] == "release" else mv.dst
            else:
                exit_state = goal_state
            cells = self.cell_path(node, entry[1], exit_state[1])
            cx = self.atlas.complex(leaf)
            for a, b in zip(cells[:-1], cells[1:]):
                pa, pb = _facet_points(cx, a, b)
                pieces.append(((leaf, a), ("chart", leaf, [self.atlas.center((leaf, a)), pa])))
                pieces.append(((leaf, b), ("chart", leaf, [pb, self.atlas.center((leaf, b))])))
            if j + 1 < len(chain):
                kind, _, mv = chain[j + 1][1]
                held_after = mv.src[0].cs.without(mv.obj).members
                if kind == "release":
                    pieces += [
                        (mv.src, ("chart", mv.src[0], [self.atlas.center(mv.src), mv.v_contact])),
                        (mv.src, ("q", mv.src[0].cs.members, mv.q_contact)),
                        (mv.src, ("q", held_after, mv.q_land)),
                        (mv.dst, ("chart", mv.dst[0], [mv.v_land, self.atlas.center(mv.dst)])),
                    ]
                    entry = mv.dst
                else:
                    pieces += [
                        (mv.dst, ("chart", mv.dst[0], [self.atlas.center(mv.dst), mv.v_land])),
                        (mv.src, ("q", held_after, mv.q_contact)),
                        (mv.src, ("chart", mv.src[0], [mv.v_contact, self.atlas.center(mv.src)])),
                    ]
                    entry = mv.src
        pieces += [("goal", it) for it in goal_attach[goal_state]]
        return pieces

    def assemble(self, q_start, pieces) -> ManipulationPath:
        builder = PathBuilder(q_start)
        for owner, item in pieces:
            try:
                if item[0] == "chart":
                    _, leaf, pts = item
                    if len(pts) >= 2 and not np.array_equal(pts[0], pts[-1]):
                        sub = reduce_contact_path(self.scene, leaf, pts, self.eps, start_q=builder.current)
                        builder.extend(sub)
                else:
                    _, held, q = item
                    if not segment_admissible(self.scene, builder.current, q):
                        raise ReductionError("witness segment is not admissible")
                    builder.move(q, tuple(held))
            except ReductionError as exc:
                exc.owner = owner
                raise
        return builder.path


def _facet_points(cx: CellComplex, a: int, b: int):
    """Centre of the common facet, expressed in the coordinates of each cell."""
    la, ha, lb, hb = cx.lo[a], cx.hi[a], cx.lo[b], cx.hi[b]
    pa = np.empty_like(la)
    pb = np.empty_like(la)
    wrap = cx.chart.wrap
    for k in range(len(la)):
        lo, hi = max(la[k], lb[k]), min(ha[k], hb[k])
        if lo <= hi:
            pa[k] = pb[k] = 0.5 * (lo + hi)
        elif wrap[k] and ha[k] >= cx.chart.hi[k] and lb[k] <= cx.chart.lo[k]:
            pa[k], pb[k] = ha[k], lb[k]
        elif wrap[k]:
            pa[k], pb[k] = la[k], hb[k]
        else:
            raise ValueError(f"cells {a} and {b} do not share a facet")
    return pa, pb


def plan(
    scene: Scene,
    query: Query,
    eps: float,
    max_cells: int | None = None,
    k_attach: int = DEFAULT_K_ATTACH,
    budget: int | None = None,
) -> PlanOutcome:
    """Decide whether ``query`` is solvable at resolution ``eps``.

    Returns SOLVED with a validated path, UNSOLVABLE when both endpoints lie in
    certified cells and the search is exhausted, and UNKNOWN otherwise.
    ``budget`` caps the number of expanded components.
    """
    query.check(scene)
    q_s = np.asarray(query.start, dtype=float)
    q_g = np.asarray(query.goal, dtype=float)
    if np.array_equal(q_s, q_g):
        return PlanOutcome(SOLVED, ManipulationPath(q_s.copy()), stats={"nodes": 0})
    pl = Planner(scene, eps, query.m, special=(q_s, q_g), max_cells=max_cells, k_attach=k_attach)
    pl.goal_placements = {k: (float(q_g[2 + 2 * k]), float(q_g[3 + 2 * k])) for k in range(scene.n)}
    start_attach, start_ok = pl.endpoint(q_s, is_goal=False)
    goal_attach, goal_ok = pl.endpoint(q_g, is_goal=True)

    def stats(nodes, repairs):
        return {
            "eps": eps,
            "m": query.m,
            "nodes": nodes,
            "leaves": len(pl.atlas.complexes),
            "cells": pl.atlas.total_cells,
            "repairs": repairs,
        }

    for repair in range(MAX_REPAIRS + 1):
        found, nodes, complete = pl.search(start_attach, goal_attach, budget)
        if found is None:
            if not complete:
                return PlanOutcome(UNKNOWN, reason="search budget exhausted", stats=stats(nodes, repair))
            if not (start_ok and goal_ok):
                which = "start" if not start_ok else "goal"
                return PlanOutcome(UNKNOWN, reason=f"{which} does not lie in a certified cell", stats=stats(nodes, repair))
            # Search again through MIXED cells: a connection there means the
            # answer depends on detail below the resolution.
            opt = Planner(scene, eps, query.m, special=(q_s, q_g), optimistic=True, atlas=pl.atlas)
            opt.goal_placements = pl.goal_placements
            found, opt_nodes, complete = opt.search(opt.endpoint(q_s, False)[0], opt.endpoint(q_g, True)[0], budget)
            st = stats(nodes, repair)
            st["optimistic_nodes"] = opt_nodes
            if found is not None or not complete:
                return PlanOutcome(UNKNOWN, reason="connection only through MIXED cells", stats=st)
            return PlanOutcome(UNSOLVABLE, reason="no connection at this resolution", stats=st)
        chain, goal_state = found
        pieces = pl.motion(chain, goal_state, start_attach, goal_attach)
        try:
            path = pl.assemble(q_s, pieces)
        except ReductionError as exc:
            owner = getattr(exc, "owner", None)
            if owner == "start":
                start_attach.pop(chain[0][1][1], None)
            elif owner == "goal":
                goal_attach.pop(goal_state, None)
            else:
                pl.ban(*owner)
            continue
        report = validate(scene, path, samples_per_segment=50)
        if not report.ok:
            raise AssertionError(f"planner produced an invalid path: {report.violations[:3]}")
        return PlanOutcome(SOLVED, path, stats=stats(nodes, repair))
    return PlanOutcome(UNKNOWN, reason="regrasp maneuvers infeasible at this eps", stats=stats(nodes, MAX_REPAIRS))

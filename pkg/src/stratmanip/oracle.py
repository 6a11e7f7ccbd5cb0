"""Brute-force lattice reachability used as ground truth for small scenes.

Every body lives on its own lattice anchored at its start position with step
``h``. A move shifts the robot by one step in a cardinal direction, optionally
together with a set of at most ``m`` objects whose gap to the robot is within
``[0, h/2]``. States are checked with the exact admissibility rules.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .geometry import CONTACT_TOL, Scene, disc_polygon_gap

DIRECTIONS = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]], dtype=np.int64)
DEFAULT_STATE_CAP = 400_000_000


class OracleCapExceeded(RuntimeError):
    pass


class _BodyLattice:
    """Statically admissible lattice positions of one body."""

    def __init__(self, scene: Scene, body: int, origin, h: float):
        r = scene.radii[body]
        xmin, ymin, xmax, ymax = scene.workspace
        self.r = r
        ox, oy = float(origin[0]), float(origin[1])
        tol = CONTACT_TOL
        i0 = math.ceil((xmin + r - tol - ox) / h)
        i1 = math.floor((xmax - r + tol - ox) / h)
        j0 = math.ceil((ymin + r - tol - oy) / h)
        j1 = math.floor((ymax - r + tol - oy) / h)
        self.i0, self.j0 = i0, j0
        nx, ny = max(i1 - i0 + 1, 0), max(j1 - j0 + 1, 0)
        ii, jj = np.meshgrid(np.arange(i0, i0 + nx), np.arange(j0, j0 + ny), indexing="ij")
        xs = ox + ii * h
        ys = oy + jj * h
        ok = np.ones((nx, ny), dtype=bool)
        strict = body == 0
        for poly in scene.obstacles:
            v = poly.array
            gap = np.vectorize(lambda x, y: disc_polygon_gap((x, y), r, v))(xs, ys) if xs.size else xs
            ok &= (gap > 0) if strict else (gap >= -tol)
        self.grid = np.full((nx, ny), -1, dtype=np.int64)
        self.grid[ok] = np.arange(int(ok.sum()))
        self.cells = np.stack([ii[ok], jj[ok]], axis=1)  # absolute lattice indices
        self.pos = np.stack([xs[ok], ys[ok]], axis=1)
        self.size = len(self.pos)
        nb = np.full((self.size, 4), -1, dtype=np.int64)
        for d, (di, dj) in enumerate(DIRECTIONS):
            a = self.cells[:, 0] + di - i0
            b = self.cells[:, 1] + dj - j0
            inside = (a >= 0) & (a < nx) & (b >= 0) & (b < ny)
            nb[inside, d] = self.grid[a[inside], b[inside]]
        self.neighbor = nb

    def index_near(self, p, origin, h: float) -> int:
        i = round((p[0] - origin[0]) / h) - self.i0
        j = round((p[1] - origin[1]) / h) - self.j0
        if 0 <= i < self.grid.shape[0] and 0 <= j < self.grid.shape[1]:
            return int(self.grid[i, j])
        return -1


def grid_reachable(
    scene: Scene, q_s, q_g, m: int, h: float, state_cap: int = DEFAULT_STATE_CAP
) -> bool:
    """Breadth-first search over lattice states from ``q_s`` to the lattice cell of ``q_g``."""
    if not h > 0:
        raise ValueError("h must be positive")
    q_s = np.asarray(q_s, dtype=float)
    q_g = np.asarray(q_g, dtype=float)
    if np.array_equal(q_s, q_g):
        return True
    n = scene.n
    starts = q_s.reshape(-1, 2)
    bodies = [_BodyLattice(scene, b, starts[b], h) for b in range(n + 1)]
    sizes = np.array([b.size for b in bodies], dtype=np.int64)
    if np.any(sizes == 0):
        return False
    total = int(np.prod(sizes.astype(object)))
    if total > state_cap:
        raise OracleCapExceeded(f"{total} lattice states exceed cap {state_cap}")
    stride = np.ones(n + 1, dtype=np.int64)
    for b in range(1, n + 1):
        stride[b] = stride[b - 1] * sizes[b - 1]

    def encode(idx):
        return int(sum(int(i) * int(s) for i, s in zip(idx, stride)))

    s_idx = [bodies[b].index_near(starts[b], starts[b], h) for b in range(n + 1)]
    goals = q_g.reshape(-1, 2)
    g_idx = [bodies[b].index_near(goals[b], starts[b], h) for b in range(n + 1)]
    if min(s_idx) < 0 or min(g_idx) < 0:
        return False
    start, goal = encode(s_idx), encode(g_idx)
    if start == goal:
        return True
    if not _pairs_ok([bodies[b].pos[g_idx[b]][None] for b in range(n + 1)], bodies).all():
        return False

    radii = scene.radii
    visited = np.zeros(total, dtype=bool)
    visited[start] = True
    frontier = np.array([start], dtype=np.int64)
    subsets = [
        H for k in range(0, min(m, n) + 1) for H in itertools.combinations(range(1, n + 1), k)
    ]
    while len(frontier):
        idx = [(frontier // stride[b]) % sizes[b] for b in range(n + 1)]
        pos = [bodies[b].pos[idx[b]] for b in range(n + 1)]
        tangent = {}
        for b in range(1, n + 1):
            gap = np.hypot(*(pos[0] - pos[b]).T) - (radii[0] + radii[b])
            tangent[b] = (gap >= -CONTACT_TOL) & (gap <= h / 2)
        new_codes = []
        for d in range(4):
            for H in subsets:
                ok = np.ones(len(frontier), dtype=bool)
                for b in H:
                    ok &= tangent[b]
                moved = (0, *H)
                new_idx = list(idx)
                for b in moved:
                    nb = bodies[b].neighbor[idx[b], d]
                    ok &= nb >= 0
                    new_idx[b] = np.where(nb >= 0, nb, 0)
                sel = np.nonzero(ok)[0]
                if len(sel) == 0:
                    continue
                cand_idx = [ni[sel] for ni in new_idx]
                new_pos = [bodies[b].pos[cand_idx[b]] for b in range(n + 1)]
                good = _pairs_ok(new_pos, bodies, moved=set(moved))
                codes = np.zeros(int(good.sum()), dtype=np.int64)
                for b in range(n + 1):
                    codes += cand_idx[b][good] * stride[b]
                new_codes.append(codes)
        if not new_codes:
            break
        codes = np.unique(np.concatenate(new_codes))
        codes = codes[~visited[codes]]
        visited[codes] = True
        if visited[goal]:
            return True
        frontier = codes
    return False


def _pairs_ok(pos, bodies, moved=None) -> np.ndarray:
    """Pairwise disc constraints; pairs whose relative position is unchanged are skipped."""
    count = len(pos[0])
    ok = np.ones(count, dtype=bool)
    for a in range(len(pos)):
        for b in range(a + 1, len(pos)):
            if moved is not None and ((a in moved) == (b in moved)):
                continue
            gap = np.hypot(*(pos[a] - pos[b]).T) - (bodies[a].r + bodies[b].r)
            ok &= gap >= -CONTACT_TOL
    return ok

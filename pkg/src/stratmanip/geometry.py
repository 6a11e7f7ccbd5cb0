"""Planar scene model: disc robot, disc objects, convex polygon obstacles.

Configurations are flat float arrays ordered
``(x_R, y_R, x_O1, y_O1, ..., x_On, y_On)``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SCENE_VERSION = "strat-manip/1"

# Slack for non-strict gap constraints. Contact configurations built from
# chart coordinates land on gap 0 only up to rounding.
CONTACT_TOL = 1e-9


class SceneError(ValueError):
    """Raised when a scene document fails validation."""


class BoxVerdict(enum.IntEnum):
    ALL_FREE = 0
    ALL_BLOCKED = 1
    UNDECIDED = 2


@dataclass(frozen=True)
class Polygon:
    """Convex polygon with counter-clockwise vertices."""

    vertices: tuple[tuple[float, float], ...]

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)


@dataclass(frozen=True)
class SceneObject:
    id: str
    radius: float


@dataclass(frozen=True)
class Scene:
    workspace: tuple[float, float, float, float]
    robot_radius: float
    objects: tuple[SceneObject, ...] = ()
    obstacles: tuple[Polygon, ...] = ()
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    @property
    def n(self) -> int:
        return len(self.objects)

    @property
    def dim(self) -> int:
        return 2 * (1 + self.n)

    @property
    def object_ids(self) -> tuple[str, ...]:
        return tuple(o.id for o in self.objects)

    @property
    def radii(self) -> np.ndarray:
        """Radii of robot then objects, as an array of length 1 + n."""
        if "radii" not in self._cache:
            self._cache["radii"] = np.array(
                [self.robot_radius] + [o.radius for o in self.objects], dtype=float
            )
        return self._cache["radii"]

    def index_of(self, object_id: str) -> int:
        for k, o in enumerate(self.objects):
            if o.id == object_id:
                return k
        raise KeyError(f"unknown object id {object_id!r}")

    def packed_obstacles(self) -> tuple[np.ndarray, np.ndarray]:
        """All obstacle vertices stacked, plus offsets so polygon k is
        ``verts[start[k]:start[k+1]]``."""
        if "packed" not in self._cache:
            polys = [p.array for p in self.obstacles]
            start = np.zeros(len(polys) + 1, dtype=np.int64)
            for k, p in enumerate(polys):
                start[k + 1] = start[k] + len(p)
            verts = np.concatenate(polys) if polys else np.zeros((0, 2))
            self._cache["packed"] = (np.ascontiguousarray(verts), start)
        return self._cache["packed"]

    def to_dict(self) -> dict:
        return {
            "version": SCENE_VERSION,
            "workspace": list(self.workspace),
            "robot_radius": self.robot_radius,
            "objects": [{"id": o.id, "radius": o.radius} for o in self.objects],
            "obstacles": [[list(v) for v in p.vertices] for p in self.obstacles],
        }


def make_scene(
    workspace: Sequence[float],
    robot_radius: float,
    objects: Sequence[tuple[str, float]] = (),
    obstacles: Sequence[Sequence[Sequence[float]]] = (),
) -> Scene:
    """Build and validate a scene from plain Python values."""
    doc = {
        "version": SCENE_VERSION,
        "workspace": list(workspace),
        "robot_radius": robot_radius,
        "objects": [{"id": i, "radius": r} for i, r in objects],
        "obstacles": [[list(v) for v in poly] for poly in obstacles],
    }
    return scene_from_dict(doc)


def load_scene(text: bytes | str) -> Scene:
    """Parse and validate a JSON scene document."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneError(f"malformed syntax at line {exc.lineno} column {exc.colno}: {exc.msg}")
    if not isinstance(doc, dict):
        raise SceneError("malformed syntax: top level must be an object")
    return scene_from_dict(doc)


def scene_from_dict(doc: dict) -> Scene:
    version = doc.get("version", SCENE_VERSION)
    if version != SCENE_VERSION:
        raise SceneError(f"unsupported version {version!r}")
    try:
        ws = tuple(float(v) for v in doc["workspace"])
        robot_radius = float(doc["robot_radius"])
        raw_objects = doc.get("objects", [])
        raw_obstacles = doc.get("obstacles", [])
    except (KeyError, TypeError, ValueError) as exc:
        raise SceneError(f"malformed syntax: {exc}")
    if len(ws) != 4 or not (ws[0] < ws[2] and ws[1] < ws[3]):
        raise SceneError("workspace: expected [xmin, ymin, xmax, ymax] with xmin<xmax, ymin<ymax")
    if not robot_radius > 0:
        raise SceneError("robot_radius: non-positive radius")

    objects = []
    seen = set()
    for k, o in enumerate(raw_objects):
        loc = f"objects[{k}]"
        try:
            oid = str(o["id"])
            radius = float(o["radius"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SceneError(f"{loc}: malformed syntax: {exc}")
        if not radius > 0:
            raise SceneError(f"{loc}: non-positive radius")
        if oid in seen:
            raise SceneError(f"{loc}: duplicate id {oid!r}")
        seen.add(oid)
        objects.append(SceneObject(oid, radius))

    obstacles = []
    for k, poly in enumerate(raw_obstacles):
        loc = f"obstacles[{k}]"
        try:
            verts = np.asarray(poly, dtype=float)
        except (TypeError, ValueError) as exc:
            raise SceneError(f"{loc}: malformed syntax: {exc}")
        if verts.ndim != 2 or verts.shape[1] != 2:
            raise SceneError(f"{loc}: malformed syntax: expected list of [x, y]")
        if len(verts) < 3:
            raise SceneError(f"{loc}: degenerate polygon ({len(verts)} vertices)")
        _check_convex_ccw(verts, loc)
        if (
            verts[:, 0].min() < ws[0]
            or verts[:, 1].min() < ws[1]
            or verts[:, 0].max() > ws[2]
            or verts[:, 1].max() > ws[3]
        ):
            raise SceneError(f"{loc}: obstacle outside workspace")
        obstacles.append(Polygon(tuple((float(x), float(y)) for x, y in verts)))

    return Scene(ws, robot_radius, tuple(objects), tuple(obstacles))


def _check_convex_ccw(verts: np.ndarray, loc: str) -> None:
    e = np.roll(verts, -1, axis=0) - verts
    if np.any(np.hypot(e[:, 0], e[:, 1]) == 0):
        raise SceneError(f"{loc}: degenerate polygon (repeated vertex)")
    en = np.roll(e, -1, axis=0)
    cross = e[:, 0] * en[:, 1] - e[:, 1] * en[:, 0]
    if np.any(cross <= 0):
        if np.all(cross < 0):
            raise SceneError(f"{loc}: polygon is clockwise")
        raise SceneError(f"{loc}: non-convex polygon")
    # Strictly convex and CCW turning, but a star polygon could still wind twice.
    angles = np.arctan2(cross, np.einsum("ij,ij->i", e, en))
    if not math.isclose(angles.sum(), 2 * math.pi, abs_tol=1e-6):
        raise SceneError(f"{loc}: non-convex polygon (self-intersecting)")


# --- point primitives ------------------------------------------------------


def disc_gap(c1, r1: float, c2, r2: float) -> float:
    return math.hypot(c1[0] - c2[0], c1[1] - c2[1]) - (r1 + r2)


def _point_segment_distance(p, a, b) -> float:
    ab = (b[0] - a[0], b[1] - a[1])
    ap = (p[0] - a[0], p[1] - a[1])
    denom = ab[0] * ab[0] + ab[1] * ab[1]
    t = 0.0 if denom == 0 else max(0.0, min(1.0, (ap[0] * ab[0] + ap[1] * ab[1]) / denom))
    return math.hypot(ap[0] - t * ab[0], ap[1] - t * ab[1])


def point_polygon_signed_distance(c, poly: Polygon | np.ndarray) -> float:
    """Euclidean distance to the polygon outside, minus depth inside."""
    verts = poly.array if isinstance(poly, Polygon) else poly
    k = len(verts)
    inside = True
    dmin = math.inf
    for i in range(k):
        a = verts[i]
        b = verts[(i + 1) % k]
        cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if cross < 0:
            inside = False
        dmin = min(dmin, _point_segment_distance(c, a, b))
    return -dmin if inside else dmin


def disc_polygon_gap(c, r: float, poly: Polygon | np.ndarray) -> float:
    return point_polygon_signed_distance(c, poly) - r


def body_positions(q) -> np.ndarray:
    return np.asarray(q, dtype=float).reshape(-1, 2)


def is_admissible(scene: Scene, q, tol: float = CONTACT_TOL) -> bool:
    """Exact admissibility of a configuration.

    The robot must keep strictly positive clearance from obstacles; every other
    pair may touch. ``tol`` only relaxes the non-strict constraints.
    """
    pos = body_positions(q)
    if len(pos) != 1 + scene.n:
        raise ValueError(f"configuration has {2 * len(pos)} coordinates, scene needs {scene.dim}")
    radii = scene.radii
    xmin, ymin, xmax, ymax = scene.workspace
    for (x, y), r in zip(pos, radii):
        if x - r < xmin - tol or x + r > xmax + tol or y - r < ymin - tol or y + r > ymax + tol:
            return False
    for poly in scene.obstacles:
        verts = poly.array
        if disc_polygon_gap(pos[0], radii[0], verts) <= 0:
            return False
        for k in range(1, len(pos)):
            if disc_polygon_gap(pos[k], radii[k], verts) < -tol:
                return False
    for a in range(len(pos)):
        for b in range(a + 1, len(pos)):
            if disc_gap(pos[a], radii[a], pos[b], radii[b]) < -tol:
                return False
    return True


def _polygon_signed_distance_many(P: np.ndarray, verts: np.ndarray) -> np.ndarray:
    a = verts
    b = np.roll(verts, -1, axis=0)
    ab = b - a  # (k, 2)
    ap = P[:, None, :] - a[None, :, :]  # (N, k, 2)
    denom = (ab * ab).sum(axis=1)
    t = np.clip((ap * ab[None]).sum(axis=2) / np.where(denom == 0, 1, denom), 0, 1)
    d = np.hypot(ap[..., 0] - t * ab[:, 0], ap[..., 1] - t * ab[:, 1]).min(axis=1)
    cross = ab[None, :, 0] * ap[..., 1] - ab[None, :, 1] * ap[..., 0]
    inside = (cross >= 0).all(axis=1)
    return np.where(inside, -d, d)


def admissible_many(scene: Scene, Q, tol: float = CONTACT_TOL) -> np.ndarray:
    """Vectorized :func:`is_admissible` over the rows of ``Q``."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    pos = Q.reshape(len(Q), -1, 2)
    radii = scene.radii
    xmin, ymin, xmax, ymax = scene.workspace
    r = radii[None, :]
    ok = (
        (pos[..., 0] - r >= xmin - tol)
        & (pos[..., 0] + r <= xmax + tol)
        & (pos[..., 1] - r >= ymin - tol)
        & (pos[..., 1] + r <= ymax + tol)
    ).all(axis=1)
    for poly in scene.obstacles:
        verts = poly.array
        ok &= _polygon_signed_distance_many(pos[:, 0], verts) - radii[0] > 0
        for k in range(1, pos.shape[1]):
            ok &= _polygon_signed_distance_many(pos[:, k], verts) - radii[k] >= -tol
    for a in range(pos.shape[1]):
        for b in range(a + 1, pos.shape[1]):
            d = np.hypot(*(pos[:, a] - pos[:, b]).T) - (radii[a] + radii[b])
            ok &= d >= -tol
    return ok


# --- interval evaluation ---------------------------------------------------


def interval_admissibility(scene: Scene, box) -> BoxVerdict:
    """Classify an axis-aligned box of configurations.

    ``box`` has shape ``(dim, 2)`` holding per-coordinate ``[lo, hi]``.
    """
    from . import kernels

    box = np.asarray(box, dtype=float)
    if box.shape != (scene.dim, 2):
        raise ValueError(f"box must have shape ({scene.dim}, 2)")
    spec = kernels.ChartSpec.for_configuration(scene)
    label = kernels.classify_boxes(box[None, :, 0], box[None, :, 1], spec)[0]
    return BoxVerdict(int(label))


# --- exact checks along straight configuration-space segments --------------


def _segment_segment_distance(p0, p1, q0, q1) -> float:
    if _segments_intersect(p0, p1, q0, q1):
        return 0.0
    return min(
        _point_segment_distance(p0, q0, q1),
        _point_segment_distance(p1, q0, q1),
        _point_segment_distance(q0, p0, p1),
        _point_segment_distance(q1, p0, p1),
    )


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _segments_intersect(p0, p1, q0, q1) -> bool:
    d1 = _orient(q0, q1, p0)
    d2 = _orient(q0, q1, p1)
    d3 = _orient(p0, p1, q0)
    d4 = _orient(p0, p1, q1)
    return ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    )


def swept_polygon_clearance(p0, p1, verts: np.ndarray) -> float:
    """Minimum signed distance from the point segment p0-p1 to a polygon.

    Non-positive when the segment meets the polygon.
    """
    d0 = point_polygon_signed_distance(p0, verts)
    d1 = point_polygon_signed_distance(p1, verts)
    if d0 <= 0 or d1 <= 0:
        return min(d0, d1)
    k = len(verts)
    return min(_segment_segment_distance(p0, p1, verts[i], verts[(i + 1) % k]) for i in range(k))


def segment_admissible(scene: Scene, q0, q1, tol: float = CONTACT_TOL) -> bool:
    """Exact admissibility of every configuration on the straight segment q0-q1.

    All gap functions restricted to a line are handled in closed form: pairwise
    distances are distances from the origin to the relative-motion segment, and
    obstacle clearance is a segment-to-polygon distance.
    """
    a = body_positions(q0)
    b = body_positions(q1)
    if not (is_admissible(scene, q0, tol) and is_admissible(scene, q1, tol)):
        return False
    radii = scene.radii
    for poly in scene.obstacles:
        verts = poly.array
        if swept_polygon_clearance(a[0], b[0], verts) - radii[0] <= 0:
            return False
        for k in range(1, len(a)):
            if np.array_equal(a[k], b[k]):
                continue
            if swept_polygon_clearance(a[k], b[k], verts) - radii[k] < -tol:
                return False
    origin = (0.0, 0.0)
    for i in range(len(a)):
        for j in range(i + 1, len(a)):
            d0 = a[i] - a[j]
            d1 = b[i] - b[j]
            dist = _point_segment_distance(origin, d0, d1)
            if dist - (radii[i] + radii[j]) < -tol:
                return False
    return True

"""Manipulation paths, their validation, and reduction of in-leaf contact paths."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Scene, admissible_many, is_admissible, segment_admissible
from .strata import Chart, ChartPoint, Leaf

TRANSIT = "TRANSIT"
TRANSFER = "TRANSFER"
RIGIDITY_TOL = 1e-9


class ReductionError(RuntimeError):
    """A regrasp maneuver is infeasible at this resolution; retry with a finer eps."""


@dataclass
class Segment:
    kind: str
    held: tuple[int, ...]
    configs: np.ndarray  # (k, dim) waypoints in configuration space

    @property
    def robot_waypoints(self) -> np.ndarray:
        return self.configs[:, :2]

    def angles(self) -> dict[int, float]:
        q = self.configs[0]
        return {
            k: math.atan2(q[3 + 2 * k] - q[1], q[2 + 2 * k] - q[0]) % (2 * math.pi) for k in self.held
        }


@dataclass
class ManipulationPath:
    start: np.ndarray
    segments: list[Segment] = field(default_factory=list)

    @property
    def end(self) -> np.ndarray:
        return self.segments[-1].configs[-1] if self.segments else self.start

    def kinds(self) -> list[str]:
        return [s.kind for s in self.segments]

    def to_dict(self, scene: Scene) -> dict:
        ids = scene.object_ids
        return {
            "start": [float(v) for v in self.start],
            "segments": [
                {
                    "kind": s.kind,
                    "contacts": [ids[k] for k in s.held],
                    "angles": {ids[k]: a for k, a in s.angles().items()},
                    "waypoints": [[float(x), float(y)] for x, y in s.robot_waypoints],
                }
                for s in self.segments
            ],
        }

    @classmethod
    def from_dict(cls, scene: Scene, doc: dict) -> "ManipulationPath":
        """Rebuild configurations from robot waypoints and contact angles."""
        q = np.array(doc["start"], dtype=float)
        path = cls(q.copy())
        R = scene.robot_radius
        for s in doc["segments"]:
            held = tuple(sorted(scene.index_of(i) for i in s["contacts"]))
            rows = []
            for x, y in s["waypoints"]:
                row = q.copy()
                row[0:2] = (x, y)
                for k in held:
                    th = s["angles"][scene.objects[k].id]
                    rho = R + scene.objects[k].radius
                    row[2 + 2 * k] = x + rho * math.cos(th)
                    row[3 + 2 * k] = y + rho * math.sin(th)
                rows.append(row)
            configs = np.array(rows)
            path.segments.append(Segment(s["kind"], held, configs))
            q = configs[-1].copy()
        return path


class PathBuilder:
    """Accumulates configuration waypoints, merging runs with the same held set."""

    def __init__(self, start):
        self.path = ManipulationPath(np.array(start, dtype=float))
        self.current = self.path.start.copy()

    def move(self, q, held: tuple[int, ...]) -> None:
        q = np.asarray(q, dtype=float)
        if np.array_equal(q, self.current):
            return
        kind = TRANSFER if held else TRANSIT
        segs = self.path.segments
        if segs and segs[-1].kind == kind and segs[-1].held == held:
            segs[-1].configs = np.vstack([segs[-1].configs, q[None]])
        else:
            segs.append(Segment(kind, held, np.vstack([self.current, q])))
        self.current = q.copy()

    def extend(self, other: ManipulationPath) -> None:
        for s in other.segments:
            for q in s.configs[1:]:
                self.move(q, s.held)


def _translate(q, bodies, delta) -> np.ndarray:
    out = np.array(q, dtype=float)
    for b in bodies:
        out[2 * b : 2 * b + 2] += delta
    return out


# --- validation -------------------------------------------------------------


@dataclass
class ValidationReport:
    ok: bool
    max_relative_drift: float
    violations: list[str]

    def to_dict(self) -> dict:
        return {"ok": self.ok, "max_relative_drift": self.max_relative_drift, "violations": self.violations}


def validate(scene: Scene, path: ManipulationPath, samples_per_segment: int = 1000) -> ValidationReport:
    """Check continuity, admissibility on dense samples, transfer rigidity and
    transit immobility of every segment."""
    violations: list[str] = []
    drift = 0.0
    n = scene.n
    prev = path.start
    if not is_admissible(scene, prev):
        violations.append("start: inadmissible")
    for si, seg in enumerate(path.segments):
        C = seg.configs
        if not np.allclose(C[0], prev, rtol=0, atol=1e-12):
            violations.append(f"segment {si}: discontinuity")
        held = set(seg.held)
        for k in range(n):
            cols = C[:, 2 + 2 * k : 4 + 2 * k]
            if k in held:
                off = cols - C[:, 0:2]
                d = float(np.abs(off - off[0]).max())
                gap = np.hypot(off[:, 0], off[:, 1]) - (scene.robot_radius + scene.objects[k].radius)
                d = max(d, float(np.abs(gap).max()))
                drift = max(drift, d)
                if d > RIGIDITY_TOL:
                    violations.append(f"segment {si}: rigidity drift {d:.3g} on {scene.objects[k].id}")
            elif not (cols == prev[2 + 2 * k : 4 + 2 * k]).all():
                what = "transit moved object" if seg.kind == TRANSIT else "transfer moved ungrasped object"
                violations.append(f"segment {si}: {what} {scene.objects[k].id}")
        if seg.kind == TRANSIT and held:
            violations.append(f"segment {si}: transit with held objects")
        # Dense samples spread over the waypoint pieces by length.
        lengths = np.abs(np.diff(C, axis=0)).max(axis=1)
        total = lengths.sum()
        chunks = []
        for a, b, length in zip(C[:-1], C[1:], lengths):
            k = max(2, int(round(samples_per_segment * length / total))) if total > 0 else 2
            t = np.linspace(0.0, 1.0, k)[:, None]
            chunks.append(a + t * (b - a))
        bad = int((~admissible_many(scene, np.vstack(chunks))).sum()) if chunks else 0
        if bad:
            violations.append(f"segment {si}: {bad} inadmissible samples")
        prev = C[-1]
    return ValidationReport(not violations, drift, violations)


# --- reduction of in-leaf contact paths ------------------------------------


def _unit(th: float) -> np.ndarray:
    return np.array([math.cos(th), math.sin(th)])


def _reangle(scene, q, cs, i, new_theta):
    """Waypoints moving the robot around fixed object ``i`` to contact angle
    ``new_theta``, carrying the other contacted objects."""
    R = scene.robot_radius
    rho = R + scene.objects[i].radius
    r = q[0:2]
    o = q[2 + 2 * i : 4 + 2 * i]
    th = math.atan2(o[1] - r[1], o[0] - r[0])
    dth = (new_theta - th + math.pi) % (2 * math.pi) - math.pi
    if abs(dth) <= 1e-12:
        return []
    # Chord at radius rho + g clears the object when g >= rho (sec(d/2) - 1).
    g = 1.25 * rho * (1 / math.cos(abs(dth) / 2) - 1) + 1e-7
    carried = [0] + [k + 1 for k in cs if k != i]
    u0 = _unit(th)
    u1 = _unit(th + dth)
    target_r = o - rho * u1
    out = _translate(q, carried, -g * u0)
    chord = _translate(q, carried, target_r - g * u1 - r)
    back = _translate(q, carried, target_r - r)
    held = tuple(k for k in cs if k != i)
    return [(out, held), (chord, held), (back, held)]


def _step_plan(scene, q, cs, theta_target, r_target, order):
    moves = []
    cur = q
    for i in order:
        for m, held in _reangle(scene, cur, cs, i, theta_target[i]):
            moves.append((m, held))
            cur = m
    final = _translate(cur, [0] + [k + 1 for k in cs], r_target - cur[0:2])
    moves.append((final, tuple(cs)))
    return moves


def _check_moves(scene, q, moves) -> bool:
    cur = q
    for m, _ in moves:
        if not segment_admissible(scene, cur, m):
            return False
        cur = m
    return True


def _chart_vector(scene: Scene, chart: Chart, p) -> np.ndarray:
    """Chart vector of a ChartPoint, a chart vector, or a configuration on the leaf."""
    if isinstance(p, ChartPoint):
        return chart.to_vector(p)
    v = np.asarray(p, dtype=float)
    if len(v) == chart.dim:
        return v
    if len(v) == scene.dim:
        return chart.project(v)  # raises StratumError off the contact
    raise ValueError(f"point has {len(v)} coordinates; chart has {chart.dim}")


def reduce_contact_path(scene: Scene, leaf: Leaf, path, eps: float, start_q=None) -> ManipulationPath:
    """Turn a chart polyline inside a leaf into transit/transfer motions.

    Positions change by rigid transfer of the robot with all contacted objects.
    Angle changes are realized by short orbits of the robot around one object
    while that object stays put. Each step is small enough that every output
    configuration stays within ``eps`` (max-norm) of the input point where the
    step began.
    """
    cs = leaf.cs.members
    chart = Chart(scene, leaf.cs, leaf)
    pts = [_chart_vector(scene, chart, p) for p in path]
    q0 = chart.embed_vector(pts[0]) if start_q is None else np.asarray(start_q, dtype=float)
    builder = PathBuilder(q0)
    if not cs:
        for p in pts[1:]:
            q1 = chart.embed_vector(p)
            if not segment_admissible(scene, builder.current, q1):
                raise ReductionError("transit segment leaves free space")
            builder.move(q1, ())
        return builder.path

    rho = {k: scene.robot_radius + scene.objects[k].radius for k in cs}
    for a, b in zip(pts[:-1], pts[1:]):
        dth = {k: b[chart.angle_dim[k]] - a[chart.angle_dim[k]] for k in cs}
        dr = b[0:2] - a[0:2]
        # Displacement per unit progress; keep each step's motion under eps / 3.
        sweep = float(np.abs(dr).max()) + sum(rho[k] * abs(dth[k]) * 1.1 for k in cs)
        steps = max(1, math.ceil(sweep / (eps / 3)))
        _reduce_piece(scene, chart, builder, a, dth, dr, cs, steps, eps)
    return builder.path


def _reduce_piece(scene, chart, builder, a, dth, dr, cs, steps, eps, depth=0):
    for s in range(steps):
        t1 = (s + 1) / steps
        x1 = a.copy()
        x1[0:2] = a[0:2] + t1 * dr
        for k in cs:
            x1[chart.angle_dim[k]] = a[chart.angle_dim[k]] + t1 * dth[k]
        theta_target = {k: x1[chart.angle_dim[k]] for k in cs}
        q = builder.current
        done = False
        for order in itertools.permutations(cs):
            moves = _step_plan(scene, q, cs, theta_target, x1[0:2], order)
            if _check_moves(scene, q, moves):
                for m, held in moves:
                    builder.move(m, held)
                done = True
                break
        if not done:
            if depth >= 5:
                raise ReductionError(
                    f"regrasp maneuver infeasible near robot position {tuple(np.round(q[0:2], 4))}; use a finer eps"
                )
            x0 = a.copy()
            x0[0:2] = a[0:2] + (s / steps) * dr
            for k in cs:
                x0[chart.angle_dim[k]] = a[chart.angle_dim[k]] + (s / steps) * dth[k]
            sub_dth = {k: dth[k] / steps for k in cs}
            _reduce_piece(scene, chart, builder, x0, sub_dth, dr / steps, cs, 2, eps, depth + 1)
        # Snap to the exact chart point so rounding does not accumulate.
        exact = chart.embed_vector(x1)
        cur = builder.current
        if np.abs(cur - exact).max() > 1e-9:
            raise ReductionError("reduction drifted off the chart path")


def max_deviation(scene: Scene, leaf: Leaf, path, result: ManipulationPath) -> float:
    """Largest max-norm distance from output configurations to the input polyline."""
    chart = Chart(scene, leaf.cs, leaf)
    pts = [np.asarray(p, dtype=float) for p in path]
    dense = []
    for a, b in zip(pts[:-1], pts[1:]):
        for t in np.linspace(0, 1, 200):
            dense.append(a + t * (b - a))
    ref = chart.embed_many(np.array(dense))
    worst = 0.0
    for seg in result.segments:
        for a, b in zip(seg.configs[:-1], seg.configs[1:]):
            for t in np.linspace(0, 1, 5):
                q = a + t * (b - a)
                worst = max(worst, float(np.abs(ref - q).max(axis=1).min()))
    return worst

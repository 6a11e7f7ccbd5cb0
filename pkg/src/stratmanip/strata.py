"""Contact strata of the configuration space and their chart coordinates.

A contact class is named by the set of objects touching the robot. Its chart
uses the robot position, one contact angle per contacted object and the
positions of all other objects. A leaf freezes those other positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from .geometry import Scene, disc_gap
from .kernels import MODE_CONTACT, MODE_FIXED, MODE_FREE, ChartSpec

TWO_PI = 2.0 * math.pi


class StratumError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class ContactSet:
    """Object indices (scene order) touching the robot."""

    members: tuple[int, ...] = ()

    @classmethod
    def of(cls, scene: Scene, ids: Iterable[str | int] = ()) -> "ContactSet":
        idx = set()
        for i in ids:
            idx.add(i if isinstance(i, int) else scene.index_of(i))
        for i in idx:
            if not 0 <= i < scene.n:
                raise KeyError(f"object index {i} out of range")
        return cls(tuple(sorted(idx)))

    @property
    def p(self) -> int:
        return len(self.members)

    def ids(self, scene: Scene) -> list[str]:
        return [scene.objects[i].id for i in self.members]

    def __contains__(self, i) -> bool:
        return i in self.members

    def __iter__(self):
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def with_(self, i: int) -> "ContactSet":
        return ContactSet(tuple(sorted(set(self.members) | {i})))

    def without(self, i: int) -> "ContactSet":
        return ContactSet(tuple(k for k in self.members if k != i))

    def issubset(self, other: "ContactSet") -> bool:
        return set(self.members) <= set(other.members)

    def label(self, scene: Scene) -> str:
        return "{" + ",".join(self.ids(scene)) + "}"


@dataclass(frozen=True)
class ChartPoint:
    robot: tuple[float, float]
    angles: Mapping[int, float] = field(default_factory=dict)
    free_placements: Mapping[int, tuple[float, float]] = field(default_factory=dict)


def class_dimension(n: int, p: int) -> int:
    if not 0 <= p <= n:
        raise StratumError(f"contact count p={p} outside 0..{n}")
    return 2 * (1 + n) - p


def ambient_dimension(p: int) -> int:
    return 2 + 2 * p


def leaf_dimension(p: int) -> int:
    return 2 + p


def contact_value(scene: Scene, q, i: int | str) -> float:
    k = i if isinstance(i, int) else scene.index_of(i)
    if not 0 <= k < scene.n:
        raise KeyError(f"unknown object {i!r}")
    q = np.asarray(q, dtype=float)
    return disc_gap(q[0:2], scene.robot_radius, q[2 + 2 * k : 4 + 2 * k], scene.objects[k].radius)


def active_contacts(scene: Scene, q, tol: float = 1e-9) -> ContactSet:
    if tol < 0:
        raise ValueError("tol must be non-negative")
    return ContactSet(tuple(k for k in range(scene.n) if abs(contact_value(scene, q, k)) <= tol))


def wrap_angle(theta: float) -> float:
    t = math.fmod(theta, TWO_PI)
    if t < 0:
        t += TWO_PI
    return 0.0 if t >= TWO_PI else t


def embed(scene: Scene, cs: ContactSet, cp: ChartPoint) -> np.ndarray:
    q = np.empty(scene.dim)
    q[0:2] = cp.robot
    R = scene.robot_radius
    for k in range(scene.n):
        if k in cs:
            rho = R + scene.objects[k].radius
            th = cp.angles[k]
            q[2 + 2 * k] = cp.robot[0] + rho * math.cos(th)
            q[3 + 2 * k] = cp.robot[1] + rho * math.sin(th)
        else:
            q[2 + 2 * k : 4 + 2 * k] = cp.free_placements[k]
    return q


def project_to_chart(scene: Scene, cs: ContactSet, q, tol: float = 1e-9) -> ChartPoint:
    q = np.asarray(q, dtype=float)
    for k in cs:
        if abs(contact_value(scene, q, k)) > tol:
            raise StratumError(f"not on stratum: object {scene.objects[k].id} is not in contact")
    robot = (float(q[0]), float(q[1]))
    angles = {
        k: wrap_angle(math.atan2(q[3 + 2 * k] - q[1], q[2 + 2 * k] - q[0])) for k in cs
    }
    free = {
        k: (float(q[2 + 2 * k]), float(q[3 + 2 * k])) for k in range(scene.n) if k not in cs
    }
    return ChartPoint(robot, angles, free)


@dataclass(frozen=True)
class Leaf:
    """A contact class with the non-contacted objects frozen at fixed points."""

    cs: ContactSet
    placements: tuple[tuple[int, float, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash((self.cs, self.placements)))

    def __hash__(self) -> int:
        return self._hash

    @classmethod
    def of(cls, cs: ContactSet, placements: Mapping[int, tuple[float, float]]) -> "Leaf":
        return cls(cs, tuple(sorted((k, float(x), float(y)) for k, (x, y) in placements.items())))

    @property
    def placement_map(self) -> dict[int, tuple[float, float]]:
        return {k: (x, y) for k, x, y in self.placements}

    @classmethod
    def through(cls, scene: Scene, cs: ContactSet, q) -> "Leaf":
        q = np.asarray(q, dtype=float)
        return cls.of(
            cs, {k: (q[2 + 2 * k], q[3 + 2 * k]) for k in range(scene.n) if k not in cs}
        )


class Chart:
    """Coordinate layout of a contact class, optionally restricted to a leaf.

    Layout: ``[x_R, y_R]`` then one angle per contacted object (scene order),
    then ``[x, y]`` per free object (scene order). In a leaf the free-object
    coordinates are dropped.
    """

    def __init__(self, scene: Scene, cs: ContactSet, leaf: Leaf | None = None):
        if leaf is not None and leaf.cs != cs:
            raise StratumError("leaf belongs to a different contact class")
        self.scene = scene
        self.cs = cs
        self.leaf = leaf
        n = scene.n
        xmin, ymin, xmax, ymax = scene.workspace
        R = scene.robot_radius
        lo = [xmin + R, ymin + R]
        hi = [xmax - R, ymax - R]
        scale = [1.0, 1.0]
        wrap = [False, False]
        self.angle_dim: dict[int, int] = {}
        self.free_dim: dict[int, int] = {}
        for k in cs:
            self.angle_dim[k] = len(lo)
            lo.append(0.0)
            hi.append(TWO_PI)
            scale.append(R + scene.objects[k].radius)
            wrap.append(True)
        fixed = leaf.placement_map if leaf is not None else {}
        for k in range(n):
            if k in cs:
                continue
            if leaf is not None:
                if k not in fixed:
                    raise StratumError(f"leaf lacks a placement for object {scene.objects[k].id}")
                continue
            r = scene.objects[k].radius
            self.free_dim[k] = len(lo)
            lo += [xmin + r, ymin + r]
            hi += [xmax - r, ymax - r]
            scale += [1.0, 1.0]
            wrap += [False, False]
        self.lo = np.array(lo)
        self.hi = np.array(hi)
        self.scale = np.array(scale)
        self.wrap = np.array(wrap, dtype=bool)
        self.fixed = fixed
        if np.any(self.hi <= self.lo):
            raise StratumError("workspace too small for the bodies")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @cached_property
    def spec(self) -> ChartSpec:
        n = self.scene.n
        mode = np.empty(n, dtype=np.int64)
        dim = np.zeros(n, dtype=np.int64)
        fixed = np.zeros((n, 4))
        for k in range(n):
            if k in self.angle_dim:
                mode[k], dim[k] = MODE_CONTACT, self.angle_dim[k]
            elif k in self.free_dim:
                mode[k], dim[k] = MODE_FREE, self.free_dim[k]
            else:
                x, y = self.fixed[k]
                mode[k] = MODE_FIXED
                fixed[k] = (x, x, y, y)
        return ChartSpec.build(self.scene, mode, dim, fixed)

    def to_vector(self, cp: ChartPoint) -> np.ndarray:
        v = np.empty(self.dim)
        v[0:2] = cp.robot
        for k, a in self.angle_dim.items():
            v[a] = wrap_angle(cp.angles[k])
        for k, a in self.free_dim.items():
            v[a : a + 2] = cp.free_placements[k]
        return v

    def from_vector(self, v) -> ChartPoint:
        v = np.asarray(v, dtype=float)
        angles = {k: float(v[a]) for k, a in self.angle_dim.items()}
        free = {k: (float(v[a]), float(v[a + 1])) for k, a in self.free_dim.items()}
        free.update(self.fixed)
        return ChartPoint((float(v[0]), float(v[1])), angles, free)

    def embed_many(self, V) -> np.ndarray:
        """Embed chart vectors (rows) into configurations (rows)."""
        V = np.atleast_2d(np.asarray(V, dtype=float))
        Q = np.empty((len(V), self.scene.dim))
        Q[:, 0:2] = V[:, 0:2]
        R = self.scene.robot_radius
        for k in range(self.scene.n):
            c = 2 + 2 * k
            if k in self.angle_dim:
                rho = R + self.scene.objects[k].radius
                th = V[:, self.angle_dim[k]]
                Q[:, c] = V[:, 0] + rho * np.cos(th)
                Q[:, c + 1] = V[:, 1] + rho * np.sin(th)
            elif k in self.free_dim:
                Q[:, c : c + 2] = V[:, self.free_dim[k] : self.free_dim[k] + 2]
            else:
                Q[:, c : c + 2] = self.fixed[k]
        return Q

    def embed_vector(self, v) -> np.ndarray:
        return self.embed_many(v)[0]

    def project(self, q, tol: float = 1e-9) -> np.ndarray:
        cp = project_to_chart(self.scene, self.cs, q, tol)
        if self.leaf is not None:
            for k, (x, y) in self.fixed.items():
                if abs(q[2 + 2 * k] - x) > tol or abs(q[3 + 2 * k] - y) > tol:
                    raise StratumError("configuration is not on this leaf")
        return self.to_vector(cp)

"""Built-in scenes and queries, plus the randomized benchmark suite."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Scene, is_admissible, make_scene


@dataclass(frozen=True)
class Problem:
    name: str
    scene: Scene
    start: np.ndarray
    goal: np.ndarray


def _rect(x0, y0, x1, y1):
    return [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]


def corridor(bay: bool = True) -> Problem:
    """Robot behind an object in a corridor; the goal puts the robot past it.

    With ``bay`` the corridor widens in the middle so the object can be parked
    aside; without it the robot can never overtake the object.
    """
    if bay:
        obstacles = [_rect(0.0, 0.3, 0.8, 0.6), _rect(1.4, 0.3, 2.0, 0.6)]
        goal_obj = (1.1, 0.45)
    else:
        obstacles = [_rect(0.0, 0.3, 2.0, 0.6)]
        goal_obj = (1.1, 0.15)
    scene = make_scene((0.0, 0.0, 2.0, 0.6), 0.1, [("O1", 0.1)], obstacles)
    start = np.array([0.3, 0.15, 0.6, 0.15])
    goal = np.array([1.8, 0.15, *goal_obj])
    return Problem("corridor_bay" if bay else "corridor", scene, start, goal)


def two_lock() -> Problem:
    """Robot pulling two objects along a tight corridor.

    The robot sits ahead of both objects and barely fits the corridor, so
    neither object can be fetched alone; only the rigid three-body assembly
    can move along the corridor.
    """
    R, r, width = 0.25, 0.1, 0.54
    scene = make_scene((0.0, 0.0, 1.4, width), R, [("O1", r), ("O2", r)])
    rho = R + r
    a = math.radians(160.3)
    y = width / 2

    def config(x):
        return np.array(
            [x, y, x + rho * math.cos(a), y + rho * math.sin(a), x + rho * math.cos(a), y - rho * math.sin(a)]
        )

    return Problem("two_lock", scene, config(0.5), config(1.0))


def open_scene(n: int = 1) -> Problem:
    objs = [(f"O{k + 1}", 0.1) for k in range(n)]
    scene = make_scene((0.0, 0.0, 1.2, 1.0), 0.1, objs)
    start = [0.2, 0.2] + [v for k in range(n) for v in (0.6 + 0.3 * k, 0.5)]
    goal = [1.0, 0.8] + [v for k in range(n) for v in (0.4 + 0.3 * k, 0.3)]
    return Problem(f"open{n}", scene, np.array(start), np.array(goal))


def split_scene() -> Problem:
    """A full-height wall separates the workspace; the object is on the left."""
    scene = make_scene(
        (0.0, 0.0, 1.2, 0.8), 0.1, [("O1", 0.1)], [_rect(0.55, 0.0, 0.65, 0.8)]
    )
    start = np.array([0.2, 0.2, 0.3, 0.5])
    goal = np.array([0.9, 0.4, 0.3, 0.5])
    return Problem("split", scene, start, goal)


BUILTIN = {
    "corridor_bay": lambda: corridor(True),
    "corridor": lambda: corridor(False),
    "two_lock": two_lock,
    "open1": lambda: open_scene(1),
    "open2": lambda: open_scene(2),
    "split": split_scene,
}


# --- randomized suite ------------------------------------------------------

GRID = 0.05


def _snap(v: float) -> float:
    return round(round(v / GRID) * GRID, 10)


def _clearance_ok(scene: Scene, q, margin: float) -> bool:
    """Admissible after growing the robot by ``margin`` and each object by half of it."""
    inflated = Scene(
        scene.workspace,
        scene.robot_radius + margin,
        tuple(type(o)(o.id, o.radius + margin / 2) for o in scene.objects),
        scene.obstacles,
    )
    return is_admissible(inflated, q)


def random_problem(seed: int, n: int | None = None, max_tries: int = 1000) -> Problem:
    """Small random scene with at most three rectangular obstacles.

    Coordinates sit on a 0.05 grid and radii are multiples of 0.025. Two-object
    scenes are kept small so the lattice oracle stays tractable. Start and goal
    keep a clearance margin so that both endpoints are certifiable.
    """
    rng = np.random.default_rng(seed)
    if n is None:
        n = 1 if rng.random() < 0.7 else 2
    for _ in range(max_tries):
        if n == 1:
            W = _snap(rng.uniform(1.0, 1.6))
            H = _snap(rng.uniform(0.6, 1.0))
        else:
            W = _snap(rng.uniform(0.65, 0.75))
            H = _snap(rng.uniform(0.45, 0.5))
        sizes = [0.075, 0.1] if n == 1 else [0.075]
        R = float(rng.choice(sizes))
        radii = [float(rng.choice(sizes)) for _ in range(n)]
        obstacles = []
        if n == 1 and rng.random() < 0.3:
            # A full-height wall makes some queries unreachable.
            w = _snap(rng.uniform(0.1, 0.2))
            x0 = _snap(rng.uniform(0.3, W - 0.3 - w))
            obstacles.append(_rect(x0, 0.0, round(x0 + w, 10), H))
        for _ in range(int(rng.integers(0, 4 - len(obstacles)))):
            w = _snap(rng.uniform(0.1, min(0.5, W / 2)))
            h = _snap(rng.uniform(0.1, min(0.5, H / 2)))
            x0 = min(_snap(rng.uniform(0, W - w)), round(W - w, 10))
            y0 = min(_snap(rng.uniform(0, H - h)), round(H - h, 10))
            if w <= 0 or h <= 0 or x0 < 0 or y0 < 0:
                continue
            obstacles.append(_rect(x0, y0, round(x0 + w, 10), round(y0 + h, 10)))
        scene = make_scene((0.0, 0.0, W, H), R, [(f"O{k + 1}", rk) for k, rk in enumerate(radii)], obstacles)

        def sample():
            for _ in range(200):
                q = np.array([_snap(rng.uniform(0, W)) if k % 2 == 0 else _snap(rng.uniform(0, H)) for k in range(scene.dim)])
                if _clearance_ok(scene, q, 0.04):
                    return q
            return None

        qs = sample()
        qg = sample()
        if qs is None or qg is None:
            continue
        return Problem(f"random{seed}", scene, qs, qg)
    raise RuntimeError("could not sample a random problem")


def random_suite(count: int = 30, seed: int = 0) -> list[Problem]:
    return [random_problem(seed * 1000 + k) for k in range(count)]

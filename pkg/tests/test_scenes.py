import json

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from stratmanip.geometry import is_admissible, load_scene
from stratmanip.scenes import BUILTIN, GRID, random_problem, random_suite


@given(st.integers(0, 10**6))
@settings(max_examples=30)
def test_random_problem_is_valid(seed):
    p = random_problem(seed)
    s = p.scene
    assert s.n in (1, 2)
    assert is_admissible(s, p.start) and is_admissible(s, p.goal)
    grid = np.concatenate([p.start, p.goal, np.ravel(s.workspace)])
    assert np.allclose(grid / GRID, np.round(grid / GRID), atol=1e-9)
    assert len(s.obstacles) <= 3
    assert load_scene(json.dumps(s.to_dict())).to_dict() == s.to_dict()


def test_suite_is_reproducible():
    a, b = random_suite(5, 1), random_suite(5, 1)
    for p, q in zip(a, b):
        assert p.name == q.name and p.scene.to_dict() == q.scene.to_dict()
        assert np.array_equal(p.start, q.start) and np.array_equal(p.goal, q.goal)


def test_builtins_are_admissible():
    for make in BUILTIN.values():
        p = make()
        assert is_admissible(p.scene, p.start) and is_admissible(p.scene, p.goal)

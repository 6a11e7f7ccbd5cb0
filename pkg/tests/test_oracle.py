import pytest

from stratmanip.oracle import OracleCapExceeded, grid_reachable
from stratmanip.scenes import corridor, open_scene, random_problem, two_lock


def test_identity_query():
    prob = corridor(False)
    assert grid_reachable(prob.scene, prob.start, prob.start, 1, 0.05)


def test_corridor_without_pocket_unreachable():
    prob = corridor(False)
    assert not grid_reachable(prob.scene, prob.start, prob.goal, 1, 0.025)


def test_corridor_with_pocket_reachable():
    prob = corridor(True)
    assert grid_reachable(prob.scene, prob.start, prob.goal, 1, 0.025)


def test_two_lock_needs_two_objects():
    prob = two_lock()
    assert grid_reachable(prob.scene, prob.start, prob.goal, 2, 0.025)
    assert not grid_reachable(prob.scene, prob.start, prob.goal, 1, 0.025)


def test_monotone_in_m_and_deterministic():
    for seed in (4, 9):
        prob = random_problem(seed, n=2)
        r1 = grid_reachable(prob.scene, prob.start, prob.goal, 1, 0.05)
        r2 = grid_reachable(prob.scene, prob.start, prob.goal, 2, 0.05)
        assert r2 or not r1
        assert r1 == grid_reachable(prob.scene, prob.start, prob.goal, 1, 0.05)


def test_monotone_in_h():
    prob = open_scene(1)
    assert grid_reachable(prob.scene, prob.start, prob.goal, 1, 0.1)
    assert grid_reachable(prob.scene, prob.start, prob.goal, 1, 0.05)


def test_state_cap():
    prob = open_scene(2)
    with pytest.raises(OracleCapExceeded):
        grid_reachable(prob.scene, prob.start, prob.goal, 2, 0.01, state_cap=1000)


def test_rejects_nonpositive_step():
    prob = open_scene(1)
    with pytest.raises(ValueError):
        grid_reachable(prob.scene, prob.start, prob.goal, 1, 0.0)

import math

import numpy as np
import pytest

from stratmanip.geometry import make_scene
from stratmanip.paths import (
    TRANSFER,
    TRANSIT,
    ManipulationPath,
    PathBuilder,
    ReductionError,
    Segment,
    max_deviation,
    reduce_contact_path,
    validate,
)
from stratmanip.strata import ContactSet, Leaf, StratumError

from oracles import random_leaf_paths

OPEN = make_scene((0, 0, 3, 3), 0.1, [("O1", 0.1)])
LEAF1 = Leaf.of(ContactSet((0,)), {})


def test_valid_hand_built_path():
    b = PathBuilder([0.5, 0.5, 1.5, 1.5])
    b.move([0.5, 1.0, 1.5, 1.5], ())
    b.move([1.3, 1.5, 1.5, 1.5], ())
    b.move([1.0, 1.5, 1.2, 1.5], (0,))
    assert b.path.kinds() == [TRANSIT, TRANSFER]
    rep = validate(OPEN, b.path)
    assert rep.ok, rep.violations
    assert rep.max_relative_drift <= 1e-12


def test_teleporting_object_is_reported():
    path = ManipulationPath(np.array([0.5, 0.5, 1.5, 1.5]))
    path.segments.append(Segment(TRANSIT, (), np.array([[0.5, 0.5, 1.5, 1.5], [0.6, 0.5, 2.0, 2.0]])))
    rep = validate(OPEN, path)
    assert not rep.ok
    assert any("transit moved object" in v for v in rep.violations)


def test_rigidity_drift_is_reported():
    q0 = np.array([1.0, 1.0, 1.2, 1.0])
    q1 = np.array([1.5, 1.0, 1.701, 1.0])
    path = ManipulationPath(q0)
    path.segments.append(Segment(TRANSFER, (0,), np.array([q0, q1])))
    rep = validate(OPEN, path)
    assert any("rigidity" in v for v in rep.violations)
    assert rep.max_relative_drift == pytest.approx(1e-3)


def test_inadmissible_samples_and_discontinuity():
    s = make_scene((0, 0, 3, 3), 0.1, [("O1", 0.1)], [[[1.4, 0], [1.6, 0], [1.6, 3], [1.4, 3]]])
    path = ManipulationPath(np.array([0.5, 0.5, 2.5, 2.5]))
    path.segments.append(Segment(TRANSIT, (), np.array([[0.5, 0.5, 2.5, 2.5], [2.0, 0.5, 2.5, 2.5]])))
    path.segments.append(Segment(TRANSIT, (), np.array([[2.1, 0.5, 2.5, 2.5], [2.2, 0.5, 2.5, 2.5]])))
    rep = validate(s, path)
    assert any("inadmissible" in v for v in rep.violations)
    assert any("discontinuity" in v for v in rep.violations)


def test_constant_angle_path_is_single_transfer():
    pts = [np.array([1.0, 1.0, 0.3]), np.array([1.8, 1.4, 0.3])]
    out = reduce_contact_path(OPEN, LEAF1, pts, 0.1)
    assert out.kinds() == [TRANSFER]
    assert validate(OPEN, out).ok


def test_angle_sweep_uses_regrasps_within_tube():
    pts = [np.array([1.5, 1.5, 0.0]), np.array([1.5, 1.5, math.pi / 2])]
    out = reduce_contact_path(OPEN, LEAF1, pts, 0.1)
    assert out.kinds().count(TRANSIT) >= 1
    assert validate(OPEN, out).ok
    assert max_deviation(OPEN, LEAF1, pts, out) <= 0.1


def test_path_leaving_the_contact_is_rejected():
    q_on = np.array([1.0, 1.0, 1.2, 1.0])
    q_off = np.array([1.0, 1.0, 1.5, 1.0])
    with pytest.raises(StratumError):
        reduce_contact_path(OPEN, LEAF1, [q_on, q_off], 0.1)


def test_infeasible_regrasp_raises():
    # The object sits in a pocket exactly as wide as itself: no room to orbit.
    s = make_scene(
        (0, 0, 3, 3), 0.1, [("O1", 0.1)],
        [[[0.9, 0.0], [1.0, 0.0], [1.0, 0.6], [0.9, 0.6]], [[1.2, 0.0], [1.3, 0.0], [1.3, 0.6], [1.2, 0.6]]],
    )
    pts = [np.array([1.1, 0.6, 3 * math.pi / 2]), np.array([1.1, 0.6, 3 * math.pi / 2 + 0.4])]
    with pytest.raises(ReductionError):
        reduce_contact_path(s, LEAF1, pts, 0.05)


def test_dict_round_trip():
    pts = [np.array([1.5, 1.5, 0.0]), np.array([1.2, 1.6, 1.0])]
    out = reduce_contact_path(OPEN, LEAF1, pts, 0.1)
    back = ManipulationPath.from_dict(OPEN, out.to_dict(OPEN))
    assert back.kinds() == out.kinds()
    assert np.allclose(back.end, out.end, atol=1e-12)
    assert validate(OPEN, back).ok


@pytest.mark.parametrize("eps", [0.1, 0.05])
def test_random_in_leaf_paths_stay_in_tube(eps):
    for scene, leaf, pts in random_leaf_paths(5, seed=int(eps * 100)):
        out = reduce_contact_path(scene, leaf, pts, eps)
        assert validate(scene, out, 200).ok
        assert max_deviation(scene, leaf, pts, out) <= eps

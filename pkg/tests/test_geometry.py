import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stratmanip.geometry import (
    BoxVerdict,
    SceneError,
    admissible_many,
    disc_gap,
    disc_polygon_gap,
    interval_admissibility,
    is_admissible,
    load_scene,
    make_scene,
    segment_admissible,
)

SQUARE = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
coord = st.floats(-5, 5, allow_nan=False)
radius = st.floats(0.01, 2, allow_nan=False)


def two_object_scene():
    return make_scene((0, 0, 4, 4), 0.2, [("A", 0.2), ("B", 0.3)], [[[1, 1], [2, 1], [2, 2], [1, 2]]])


@pytest.mark.parametrize(
    "c2, expected", [((3, 0), 1.0), ((2, 0), 0.0), ((1, 0), -1.0)]
)
def test_disc_gap_examples(c2, expected):
    assert disc_gap((0, 0), 1, c2, 1) == pytest.approx(expected)


@pytest.mark.parametrize("c, expected", [((0, 3), 1.0), ((0, 2), 0.0)])
def test_disc_polygon_gap_examples(c, expected):
    assert disc_polygon_gap(c, 1, SQUARE) == pytest.approx(expected)


def test_disc_polygon_gap_center_inside_is_negative():
    assert disc_polygon_gap((0.5, 0.5), 0.1, SQUARE) < 0


@given(coord, coord, radius, coord, coord, radius)
def test_disc_gap_symmetric(x1, y1, r1, x2, y2, r2):
    assert disc_gap((x1, y1), r1, (x2, y2), r2) == disc_gap((x2, y2), r2, (x1, y1), r1)


@given(coord, coord, radius)
def test_disc_polygon_gap_sign_matches_sampled_overlap(x, y, r):
    g = disc_polygon_gap((x, y), r, SQUARE)
    # Distance from the center to the square, computed by clamping.
    cx, cy = min(max(x, 0), 1), min(max(y, 0), 1)
    d = math.hypot(x - cx, y - cy)
    if d > 0:
        assert g == pytest.approx(d - r, abs=1e-12)
    else:
        assert g < 0


def test_robot_tangent_to_obstacle_is_inadmissible():
    s = two_object_scene()
    assert not is_admissible(s, [0.8, 1.5, 3.5, 3.5, 3.0, 0.5])


def test_object_tangent_to_obstacle_is_admissible():
    s = two_object_scene()
    assert is_admissible(s, [0.3, 3.5, 0.8, 1.5, 3.0, 0.5])


def test_overlapping_objects_are_inadmissible():
    s = two_object_scene()
    assert not is_admissible(s, [0.3, 3.5, 3.0, 3.0, 3.2, 3.2])


def test_robot_object_contact_and_object_tangency_are_admissible():
    s = two_object_scene()
    assert is_admissible(s, [3.0, 3.0, 3.4, 3.0, 3.4, 2.5])


def test_workspace_containment():
    s = two_object_scene()
    assert not is_admissible(s, [0.1, 3.0, 3.0, 3.0, 3.0, 0.5])


@given(st.lists(st.floats(0, 4), min_size=6, max_size=6))
def test_admissibility_invariant_under_object_relabeling(q):
    s = make_scene((0, 0, 4, 4), 0.2, [("A", 0.25), ("B", 0.25)], [[[1, 1], [2, 1], [2, 2], [1, 2]]])
    swapped = [q[0], q[1], q[4], q[5], q[2], q[3]]
    assert is_admissible(s, q) == is_admissible(s, swapped)


def test_admissible_many_matches_scalar_predicate():
    s = two_object_scene()
    rng = np.random.default_rng(1)
    Q = rng.uniform(0, 4, size=(3000, 6))
    expected = np.array([is_admissible(s, q) for q in Q])
    assert np.array_equal(admissible_many(s, Q), expected)


def test_interval_admissibility_examples():
    s = make_scene((0, 0, 4, 4), 0.2, [], [[[1, 1], [3, 1], [3, 3], [1, 3]]])
    assert interval_admissibility(s, [[0.3, 0.5], [3.4, 3.6]]) == BoxVerdict.ALL_FREE
    assert interval_admissibility(s, [[1.8, 2.2], [1.8, 2.2]]) == BoxVerdict.ALL_BLOCKED
    assert interval_admissibility(s, [[0.6, 1.0], [2.0, 2.2]]) == BoxVerdict.UNDECIDED


def test_interval_admissibility_is_conservative():
    """Random boxes: ALL_FREE boxes hold no inadmissible point, ALL_BLOCKED no admissible one."""
    s = two_object_scene()
    rng = np.random.default_rng(7)
    bad = 0
    decided = 0
    for _ in range(10_000):
        c = rng.uniform(0, 4, size=6)
        w = rng.uniform(0, 0.3, size=6)
        box = np.stack([c - w, c + w], axis=1)
        verdict = interval_admissibility(s, box)
        if verdict == BoxVerdict.UNDECIDED:
            continue
        decided += 1
        pts = box[:, 0] + rng.random((100, 6)) * (box[:, 1] - box[:, 0])
        ok = admissible_many(s, pts)
        bad += int((~ok).sum()) if verdict == BoxVerdict.ALL_FREE else int(ok.sum())
    assert decided > 1000
    assert bad == 0


def test_segment_admissible_detects_crossing():
    s = make_scene((0, 0, 4, 4), 0.2, [], [[[1.5, 0], [2.5, 0], [2.5, 4], [1.5, 4]]])
    assert not segment_admissible(s, [0.5, 2.0], [3.5, 2.0])
    assert segment_admissible(s, [0.5, 2.0], [0.5, 3.0])


def test_load_scene_valid_document():
    doc = {
        "version": "strat-manip/1",
        "workspace": [0, 0, 2, 2],
        "robot_radius": 0.1,
        "objects": [{"id": "O1", "radius": 0.1}, {"id": "O2", "radius": 0.2}],
        "obstacles": [[[0.5, 0.5], [1, 0.5], [1, 1]]],
    }
    s = load_scene(json.dumps(doc).encode())
    assert s.n == 2
    assert s.object_ids == ("O1", "O2")
    assert load_scene(json.dumps(s.to_dict())) == s


@pytest.mark.parametrize(
    "patch, message",
    [
        ({"obstacles": [[[0, 0], [1, 1]]]}, "degenerate polygon"),
        ({"objects": [{"id": "O1", "radius": 0}]}, "non-positive radius"),
        ({"objects": [{"id": "O1", "radius": 0.1}, {"id": "O1", "radius": 0.1}]}, "duplicate id"),
        ({"obstacles": [[[0, 0], [0, 1], [1, 0]]]}, "clockwise"),
        ({"obstacles": [[[0, 0], [2, 0], [1, 0.2], [2, 2], [0, 2]]]}, "non-convex"),
        ({"obstacles": [[[1, 1], [3, 1], [3, 3]]]}, "outside workspace"),
    ],
)
def test_load_scene_errors(patch, message):
    doc = {"workspace": [0, 0, 2, 2], "robot_radius": 0.1, "objects": [], "obstacles": []}
    doc.update(patch)
    with pytest.raises(SceneError, match=message):
        load_scene(json.dumps(doc))


def test_load_scene_reports_syntax_location():
    with pytest.raises(SceneError, match="line 1"):
        load_scene(b'{"workspace": [0, 0, 1, 1],')

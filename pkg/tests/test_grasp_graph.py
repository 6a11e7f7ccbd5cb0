import math

import numpy as np
import pytest

from stratmanip.decomposition import FREE
from stratmanip.geometry import make_scene
from stratmanip.grasp_graph import (
    TRANSFER,
    TRANSIT,
    GraphError,
    ManipulationGraph,
    build_graph,
    decompose_classes,
    project_transfer,
    refine,
    transfer_image,
)
from stratmanip.scenes import open_scene, split_scene
from stratmanip.strata import ContactSet

from oracles import label_at, robot_flood_fill

O1, O2, O12 = ContactSet((0,)), ContactSet((1,)), ContactSet((0, 1))


def _box_gap(cx, c):
    """Lower bound on the robot to free-object distance over an O1 cell."""
    dx = max(cx.lo[c, 3] - cx.hi[c, 0], cx.lo[c, 0] - cx.hi[c, 3], 0.0)
    dy = max(cx.lo[c, 4] - cx.hi[c, 1], cx.lo[c, 1] - cx.hi[c, 4], 0.0)
    return math.hypot(dx, dy)


def _bases(classes, c):
    return classes[O1].bases.get(c, {}).get(O12, ())


@pytest.fixture(scope="module")
def small2():
    """Two-object scene small enough to build with every transit test."""
    scene = make_scene((0, 0, 0.5, 0.4), 0.1, [("O1", 0.05), ("O2", 0.05)], [])
    classes = refine(scene, decompose_classes(scene, 0.1))
    return scene, classes


def test_project_transfer_empty_when_contact_cannot_form(small2):
    scene, classes = small2
    cx = classes[O1].complex
    far = [c for c in classes[O1].free_cells() if _box_gap(cx, c) > 0.2]
    assert far
    assert transfer_image(scene, cx, int(far[0]), O12) == []
    assert project_transfer(scene, cx, int(far[0]), classes[O12].complex) == ()


def test_project_transfer_nonempty_when_interval_straddles_contact(small2):
    scene, classes = small2
    bases = [b for per in classes[O1].bases.values() for b in per.get(O12, ())]
    assert bases
    # Every base is a FREE cell whose box meets the transfer image.
    cx = classes[O1].complex
    tx = classes[O12].complex
    c = next(c for c, per in classes[O1].bases.items() if per.get(O12))
    boxes = transfer_image(scene, cx, c, O12)
    for b in classes[O1].bases[c][O12]:
        assert tx.label[b] == FREE
        assert any(np.all(tx.lo[b] <= hi + 1e-12) and np.all(tx.hi[b] >= lo - 1e-12) for lo, hi in boxes)


def test_transfer_image_rejects_non_incremental_target(small2):
    scene, classes = small2
    with pytest.raises(GraphError):
        transfer_image(scene, classes[O1].complex, int(classes[O1].free_cells()[0]), O1)


def test_refinement_identity_for_one_object():
    scene = open_scene(1).scene
    classes = refine(scene, decompose_classes(scene, 0.1))
    assert list(classes) == [O1]
    assert all(per == {} for per in classes[O1].bases.values())


def test_transfer_adjacency_rules(small2):
    scene, classes = small2
    g = ManipulationGraph(scene, 0.1, 2, classes)
    deep = classes[O12].complex
    a, b = next((int(a), int(b)) for a, b in deep.pairs if deep.label[a] == FREE and deep.label[b] == FREE)
    assert g.transfer_adjacent((O12, a), (O12, b))
    # Same class, facet normal to a free-object axis, no shared base.
    cx = classes[O1].complex
    free_axes = set(range(3, 5))
    found = False
    for a, b in cx.pairs:
        a, b = int(a), int(b)
        if cx.label[a] != FREE or cx.label[b] != FREE:
            continue
        axis = next(k for k in range(5) if min(cx.ihi[a, k], cx.ihi[b, k]) <= max(cx.ilo[a, k], cx.ilo[b, k]))
        if axis in free_axes and not set(_bases(classes, a)) & set(_bases(classes, b)):
            assert not g.transfer_adjacent((O1, a), (O1, b))
            found = True
            break
    assert found
    # Across classes: a cell and one of its cylinder bases.
    c = next(c for c, per in classes[O1].bases.items() if per.get(O12))
    assert g.transfer_adjacent((O1, c), (O12, classes[O1].bases[c][O12][0]))


def test_adjacency_is_symmetric(small2):
    scene, classes = small2
    g = ManipulationGraph(scene, 0.1, 2, classes)
    rng = np.random.default_rng(0)
    picks = [g.nodes[i] for i in rng.choice(len(g.nodes), 25, replace=False)]
    for a in picks:
        for b in picks:
            assert g.transfer_adjacent(a, b) == g.transfer_adjacent(b, a)
    for a in picks[:8]:
        for b in picks[:8]:
            assert g.transit_adjacent(a, b) == g.transit_adjacent(b, a)


def test_transit_examples():
    scene = open_scene(1).scene
    g = ManipulationGraph(scene, 0.1, 1, refine(scene, decompose_classes(scene, 0.1)))
    boxes = {nd: g.placement_box(nd) for nd in g.nodes}
    nodes = list(boxes)
    far = next((a, b) for a in nodes for b in nodes if boxes[a][0, 1] < boxes[b][0, 0])
    assert not g.transit_adjacent(*far)
    # Two cells around one placement in open space: the robot walks around the object.
    cx = g.classes[O1].complex
    w = np.array([0.6, 0.5])
    a = cx.locate(np.array([w[0] - 0.2, w[1], 0.0]))
    b = cx.locate(np.array([w[0] + 0.2, w[1], math.pi]))
    assert g.transit_adjacent((O1, a), (O1, b))


def test_transit_blocked_by_ring():
    # The object closes a gap in a wall ring around the robot's start side.
    scene = make_scene(
        (0, 0, 1.2, 1.2), 0.1, [("O1", 0.1)],
        [[[0.5, 0.0], [0.6, 0.0], [0.6, 0.5], [0.5, 0.5]], [[0.5, 0.7], [0.6, 0.7], [0.6, 1.2], [0.5, 1.2]]],
    )
    g = ManipulationGraph(scene, 0.05, 1, refine(scene, decompose_classes(scene, 0.05)))
    cx = g.classes[O1].complex
    w = np.array([0.55, 0.6])
    left = cx.locate(np.array([w[0] - 0.2, w[1], 0.0]))
    right = cx.locate(np.array([w[0] + 0.2, w[1], math.pi]))
    lab, xs, ys = robot_flood_fill(scene, w[None], 0.005)
    assert label_at(lab, xs, ys, (0.2, 0.6)) != label_at(lab, xs, ys, (0.9, 0.6))
    assert not g.transit_adjacent((O1, left), (O1, right))


def test_one_object_graph_components():
    assert build_graph(open_scene(1).scene, 0.1, 1).components().max() == 0
    assert build_graph(split_scene().scene, 0.1, 1).components().max() >= 1


def test_m_reduces_nodes_and_edges(small2):
    scene, classes = small2
    g2 = ManipulationGraph(scene, 0.1, 2, classes).build(all_transit=True)
    g1 = ManipulationGraph(scene, 0.1, 1, classes).build(all_transit=True)
    assert len(g1.nodes) < len(g2.nodes)
    assert all(nd[0].p == 1 for nd in g1.nodes)
    e1 = {(g1.nodes[a], g1.nodes[b], k) for a, b, k, _ in g1.edges}
    e2 = {(g2.nodes[a], g2.nodes[b], k) for a, b, k, _ in g2.edges}
    assert e1 <= e2
    assert {k for _, _, k, _ in g2.edges} == {TRANSFER, TRANSIT}


def test_graph_dump_and_node_lookup():
    scene = open_scene(1).scene
    g = build_graph(scene, 0.1, 1)
    doc = g.to_dict()
    assert len(doc["nodes"]) == len(g.nodes)
    assert all(e["a"] < e["b"] and e["kind"] in (TRANSFER, TRANSIT) for e in doc["edges"])
    assert g.dumps() == build_graph(scene, 0.1, 1).dumps()
    q = np.array([0.4, 0.5, 0.6, 0.5])
    assert g.nodes[g.node_at(q)][0] == O1
    assert g.node_at(np.array([0.2, 0.2, 0.6, 0.5])) is None


def test_build_graph_rejects_bad_m():
    with pytest.raises(GraphError):
        build_graph(open_scene(1).scene, 0.1, 2)


@pytest.mark.parametrize("name", ["open", "box"])
def test_one_object_partition_matches_oracle(name):
    from oracles import n1_partition_oracle, n1_scenes, same_partition

    g = build_graph(n1_scenes()[name], 0.1, 1)
    assert same_partition(g.components(), n1_partition_oracle(g, 0.02))

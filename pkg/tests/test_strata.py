import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stratmanip.geometry import make_scene
from stratmanip.strata import (
    Chart,
    ChartPoint,
    ContactSet,
    Leaf,
    StratumError,
    active_contacts,
    ambient_dimension,
    class_dimension,
    contact_value,
    embed,
    leaf_dimension,
    project_to_chart,
)

UNIT1 = make_scene((-10, -10, 10, 10), 1.0, [("O1", 1.0)])
UNIT2 = make_scene((-10, -10, 10, 10), 1.0, [("O1", 1.0), ("O2", 1.0)])


@pytest.mark.parametrize("obj, expected", [((2, 0), 0.0), ((3, 0), 1.0), ((1, 0), -1.0)])
def test_contact_value_examples(obj, expected):
    assert contact_value(UNIT1, [0, 0, *obj], "O1") == pytest.approx(expected)


def test_contact_value_unknown_id():
    with pytest.raises(KeyError):
        contact_value(UNIT1, [0, 0, 2, 0], "O9")


def test_active_contacts_examples():
    assert active_contacts(UNIT2, [0, 0, 5, 5, -5, -5]) == ContactSet(())
    assert active_contacts(UNIT2, [0, 0, 2, 0, -5, -5]) == ContactSet((0,))
    assert active_contacts(UNIT2, [0, 0, 2, 0, -2, 0]) == ContactSet((0, 1))


def test_embed_examples():
    cs = ContactSet((0,))
    assert np.allclose(embed(UNIT1, cs, ChartPoint((0, 0), {0: 0.0})), [0, 0, 2, 0])
    assert np.allclose(embed(UNIT1, cs, ChartPoint((0, 0), {0: math.pi / 2})), [0, 0, 0, 2])
    q = embed(UNIT1, ContactSet(()), ChartPoint((1, 2), {}, {0: (3, 4)}))
    assert np.array_equal(q, [1, 2, 3, 4])


def test_project_examples():
    cs = ContactSet((0,))
    assert project_to_chart(UNIT1, cs, [0, 0, 2, 0]).angles[0] == pytest.approx(0)
    assert project_to_chart(UNIT1, cs, [0, 0, 0, 2]).angles[0] == pytest.approx(math.pi / 2)
    with pytest.raises(StratumError, match="not on stratum"):
        project_to_chart(UNIT1, cs, [0, 0, 2.5, 0])


def test_class_dimension_examples():
    assert class_dimension(2, 1) == 5 and leaf_dimension(1) == 3
    assert class_dimension(2, 2) == 4
    assert class_dimension(3, 0) == 8
    assert ambient_dimension(2) == 6
    with pytest.raises(StratumError):
        class_dimension(2, 3)


@given(st.integers(0, 6), st.data())
def test_class_dimension_codimension(n, data):
    p = data.draw(st.integers(0, n))
    assert class_dimension(n, p) + p == 2 * (1 + n)


SCENE3 = make_scene((-10, -10, 10, 10), 0.5, [("O1", 0.3), ("O2", 0.4), ("O3", 0.6)])


@pytest.mark.parametrize(
    "members", [c for p in range(4) for c in itertools.combinations(range(3), p)]
)
def test_round_trip_and_contacts(members):
    cs = ContactSet(members)
    rng = np.random.default_rng(len(members) * 10 + sum(members))
    for _ in range(1000):
        cp = ChartPoint(
            tuple(rng.uniform(-5, 5, 2)),
            {k: float(rng.uniform(0, 2 * math.pi)) for k in cs},
            {k: tuple(rng.uniform(-5, 5, 2)) for k in range(3) if k not in cs},
        )
        q = embed(SCENE3, cs, cp)
        back = project_to_chart(SCENE3, cs, q)
        assert np.allclose(back.robot, cp.robot, atol=1e-9)
        for k in cs:
            d = (back.angles[k] - cp.angles[k] + math.pi) % (2 * math.pi) - math.pi
            assert abs(d) <= 1e-9
        for k, v in cp.free_placements.items():
            assert np.allclose(back.free_placements[k], v, atol=1e-9)
        assert set(cs.members) <= set(active_contacts(SCENE3, q, 1e-9).members)
        assert np.allclose(embed(SCENE3, cs, back), q, atol=1e-9)


def test_chart_layout_and_leaf():
    chart = Chart(UNIT2, ContactSet((1,)))
    assert chart.dim == class_dimension(2, 1)
    assert chart.angle_dim == {1: 2} and chart.free_dim == {0: 3}
    leaf = Leaf.of(ContactSet((1,)), {0: (3.0, 3.0)})
    lchart = Chart(UNIT2, ContactSet((1,)), leaf)
    assert lchart.dim == leaf_dimension(1)
    q = lchart.embed_vector([0, 0, math.pi])
    assert np.allclose(q, [0, 0, 3, 3, -2, 0])
    assert np.allclose(lchart.project(q), [0, 0, math.pi])

import math

import numpy as np
import pytest

from jumppath import Difference, Domain, EmptySet, Union, WholeSpace, cube_grid_union
from jumppath.geometry import GeometryError, hit_or_miss_volume, is_subset


def test_open_membership():
    b = Domain.ball([0.0, 0.0], 1.0)
    assert [0.0, 0.999] in b
    assert [0.0, 1.0] not in b
    q = Domain.cube([0.0], 1.0)
    assert [0.4999] in q and [0.5] not in q and [-0.5] not in q


def test_volumes():
    assert Domain.ball([0], 0.3).volume() == pytest.approx(0.6)
    assert Domain.ball([0, 0], 2).volume() == pytest.approx(4 * math.pi)
    assert Domain.ball([0, 0, 0], 1).volume() == pytest.approx(4 * math.pi / 3)
    assert Domain.cube([1, 2], 0.5).volume() == pytest.approx(0.25)
    assert Domain.ball([0], 0.0).volume() == 0.0
    assert WholeSpace(2).volume() == math.inf and EmptySet(2).volume() == 0.0


def test_zero_extent_is_empty():
    assert [0.0] not in Domain.ball([0.0], 0.0)


def test_validation():
    with pytest.raises(GeometryError):
        Domain("triangle", [0], 1)
    with pytest.raises(GeometryError):
        Domain.ball([0], -1)
    with pytest.raises(GeometryError):
        Domain.ball([0, 0], 1).contains(np.zeros((3, 3)))


def test_union_difference_volumes():
    a, b = Domain.cube([0, 0], 1), Domain.cube([2, 0], 1)
    assert Union((a, b)).volume() == pytest.approx(2.0)
    overlap = Union((Domain.cube([0, 0], 1), Domain.cube([0.5, 0], 1)))
    assert overlap.volume() == pytest.approx(1.5, abs=0.01)
    ring = Difference(Domain.ball([0], 1), Domain.ball([0], 0.5))
    assert ring.volume() == pytest.approx(1.0)
    assert [0.75] in ring and [0.25] not in ring
    assert hit_or_miss_volume(Domain.ball([0, 0], 1), n=200_000) == pytest.approx(math.pi, rel=0.01)


def test_subset():
    Q = Domain.cube([0, 0], 1)
    assert is_subset(Domain.cube([0.25, 0], 0.5), Q)
    assert not is_subset(Domain.cube([0.3, 0], 0.5), Q)
    assert is_subset(Domain.ball([0, 0], 0.5), Q)
    assert not is_subset(Domain.ball([0, 0], 0.51), Q)
    assert is_subset(Domain.cube([0, 0], 1), Domain.ball([0, 0], math.sqrt(0.5) + 1e-9))
    assert is_subset(EmptySet(2), Q) and is_subset(Q, WholeSpace(2))
    assert is_subset(Domain.ball([0.9], 0.0), Domain.ball([0], 0.1))


@pytest.mark.parametrize("d,cells", [(1, 8), (2, 4), (3, 3)])
def test_cube_grid_union(d, cells):
    u = cube_grid_union(np.zeros(d), 1.0, 0.1, cells)
    assert len(u.parts) == cells**d
    assert u.volume() == pytest.approx(0.1)
    assert is_subset(u, Domain.cube(np.zeros(d), 1.0))

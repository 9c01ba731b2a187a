from collections import deque

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lipiring.topology import (
    Grid,
    Ring,
    describe,
    effective_subpopulation_size,
    neighbors,
    propagation_hops,
    subpopulation_size,
    takeover_time,
)


def bfs(t, src):
    dist = {src: 0}
    queue = deque([src])
    while queue:
        c = queue.popleft()
        for n in neighbors(t, c)[1:]:
            if n not in dist:
                dist[n] = dist[c] + 1
                queue.append(n)
    return dist


grids = st.builds(Grid, st.integers(1, 6), st.integers(1, 6))


@st.composite
def rings(draw):
    z = draw(st.integers(3, 20))
    r = draw(st.integers(1, (z - 1) // 2))
    return Ring(z, r)


topologies = st.one_of(grids, rings())


def test_grid_4x4_cell_1_1():
    g = Grid(4, 4)
    got = {g.coords(c) for c in neighbors(g, g.index(1, 1))[1:]}
    assert got == {(0, 1), (2, 1), (1, 0), (1, 2)}


def test_grid_order():
    g = Grid(4, 4)
    assert neighbors(g, g.index(1, 1)) == [5, 1, 9, 4, 6]


def test_ring6_r1():
    assert neighbors(Ring(6, 1), 0) == [0, 5, 1]


def test_ring6_r2():
    assert neighbors(Ring(6, 2), 0) == [0, 5, 1, 4, 2]
    assert set(neighbors(Ring(6, 2), 0)[1:]) == {4, 5, 1, 2}


def test_grid_wraparound():
    g = Grid(3, 3)
    assert {g.coords(c) for c in neighbors(g, 0)[1:]} == {(2, 0), (1, 0), (0, 2), (0, 1)}


def test_grid_1x1_dedup():
    assert neighbors(Grid(1, 1), 0) == [0]
    assert effective_subpopulation_size(Grid(1, 1)) == 1


def test_subpopulation_sizes():
    assert subpopulation_size(Ring(6, 1)) == 3
    assert subpopulation_size(Ring(6, 2)) == 5
    assert subpopulation_size(Grid(3, 3)) == 5
    assert subpopulation_size(Grid(10, 7)) == 5


def test_ring_radius_too_large():
    with pytest.raises(ValueError):
        Ring(6, 3)
    with pytest.raises(ValueError):
        Ring(6, 0)


def test_small_rings_allowed_with_radius_one():
    assert neighbors(Ring(2, 1), 0) == [0, 1]
    assert neighbors(Ring(1, 1), 0) == [0]


def test_invalid_cell():
    with pytest.raises(ValueError):
        neighbors(Ring(6, 1), 6)
    with pytest.raises(ValueError):
        neighbors(Grid(2, 2), -1)


def test_hops_examples():
    assert propagation_hops(Ring(6, 1), 0, 3) == 3
    assert propagation_hops(Ring(6, 2), 0, 3) == 2
    assert propagation_hops(Grid(3, 3), 4, 4) == 0


def test_takeover_times():
    assert takeover_time(Ring(6, 1)) == 3
    assert takeover_time(Ring(6, 2)) == 2
    assert takeover_time(Grid(3, 3)) == 2


def test_describe():
    assert describe(Ring(6, 1)) == "ring6r1"
    assert describe(Grid(3, 4)) == "grid3x4"


@given(topologies)
def test_neighbor_symmetry(t):
    for a in range(t.size):
        for b in neighbors(t, a)[1:]:
            assert a in neighbors(t, b)


@given(topologies)
def test_regular_and_center_first(t):
    sizes = set()
    for c in range(t.size):
        ns = neighbors(t, c)
        assert ns[0] == c
        assert len(ns) == len(set(ns))
        sizes.add(len(ns))
    assert len(sizes) == 1


@given(rings())
def test_ring_full_size(t):
    assert len(neighbors(t, 0)) == subpopulation_size(t)


@given(topologies)
def test_hops_equal_bfs(t):
    for src in range(t.size):
        dist = bfs(t, src)
        for dst in range(t.size):
            assert propagation_hops(t, src, dst) == dist[dst]


@given(topologies, st.data())
def test_hops_triangle(t, data):
    cell = st.integers(0, t.size - 1)
    a, b, c = data.draw(cell), data.draw(cell), data.draw(cell)
    assert propagation_hops(t, a, c) <= propagation_hops(t, a, b) + propagation_hops(t, b, c)


def test_ring2_and_grid_same_degree():
    assert len(neighbors(Ring(9, 2), 0)) - 1 == len(neighbors(Grid(3, 3), 0)) - 1 == 4

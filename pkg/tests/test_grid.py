"""Grid substrate: construction, paths, centrality, reachability."""

from __future__ import annotations

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clutternav.grid import CellState, GridGraph, PlacementError
from .conftest import graph_from_ascii, open_room
from .oracles import bfs_distances, brute_force_betweenness, flood_fill


def count_edges(graph: GridGraph) -> int:
    return sum(len(list(graph.neighbors_free(c))) for c in graph.free_cells()) // 2


def random_obstacle_grid(size: int, n_obstacles: int, seed: int) -> GridGraph:
    rng = random.Random(seed)
    rows = [["."] * size for _ in range(size)]
    placed = 0
    while placed < n_obstacles:
        x, y = rng.randrange(size), rng.randrange(size)
        if rows[y][x] == ".":
            rows[y][x] = "o"
            placed += 1
    return graph_from_ascii("\n".join("".join(r) for r in rows))


class TestBuild:
    def test_open_3x3(self):
        g = open_room(3, 3)
        assert g.n_free == 9
        assert count_edges(g) == 12

    def test_center_obstacle(self):
        g = graph_from_ascii("...\n.o.\n...")
        assert g.n_free == 8
        assert count_edges(g) == 8
        assert g.state((1, 1)) == CellState.OBSTACLE

    def test_corridor_cut_into_components(self):
        g = graph_from_ascii("..o..")
        assert g.reachable_set((0, 0)) == {(0, 0), (1, 0)}
        assert g.reachable_set((3, 0)) == {(3, 0), (4, 0)}

    def test_obstacle_on_wall_rejected(self):
        g = open_room(3, 3)
        with pytest.raises(PlacementError):
            GridGraph.build(g.floorplan, obstacles={(-1, 0): "obs_0"})
        plan = graph_from_ascii("#..").floorplan
        with pytest.raises(PlacementError):
            GridGraph.build(plan, obstacles={(0, 0): "obs_0"})

    def test_occupants_tracked(self):
        g = graph_from_ascii(".oR")
        assert g.occupant((1, 0)) == "obs_0"
        assert g.occupant((2, 0)) == "rec_0"
        assert g.occupant((0, 0)) is None


class TestShortestPath:
    def test_3x3_diagonal(self):
        g = open_room(3, 3)
        path = g.shortest_path((0, 0), (2, 2))
        assert path is not None
        assert len(path) - 1 == 4
        assert path[0] == (0, 0) and path[-1] == (2, 2)

    def test_disconnected_returns_none(self):
        g = graph_from_ascii("..o..")
        assert g.shortest_path((0, 0), (4, 0)) is None

    def test_bad_endpoints(self):
        g = graph_from_ascii("..o..")
        with pytest.raises(ValueError):
            g.shortest_path((2, 0), (0, 0))
        with pytest.raises(ValueError):
            g.shortest_path((0, 0), (2, 0))

    def test_matches_bfs_oracle_through_wall_gap(self):
        g = graph_from_ascii(
            """
.....
.....
##.##
.....
.....
"""
        )
        dist = bfs_distances(g, (0, 0))
        for cell, expect in dist.items():
            path = g.shortest_path((0, 0), cell)
            assert path is not None
            assert len(path) - 1 == expect

    def test_deterministic_paths(self):
        g = random_obstacle_grid(7, 8, seed=5)
        free = g.free_cells()
        src = free[0]
        for dst in free:
            if g.shortest_path(src, dst) is None:
                continue
            first = g.shortest_path(src, dst)
            for _ in range(3):
                assert g.shortest_path(src, dst) == first

    def test_path_steps_are_adjacent(self):
        g = random_obstacle_grid(6, 6, seed=9)
        free = g.free_cells()
        path = g.shortest_path(free[0], free[-1])
        if path:
            for a, b in zip(path, path[1:]):
                assert abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1


class TestGeodesicTime:
    def test_adjacent(self):
        g = open_room(3, 1)
        assert g.geodesic_time((0, 0), (1, 0), 1.0) == 1.0

    def test_identity(self):
        g = open_room(3, 1)
        assert g.geodesic_time((1, 0), (1, 0)) == 0.0

    def test_ten_step_path(self):
        g = open_room(11, 1)
        assert g.geodesic_time((0, 0), (10, 0), 1.0) == 10.0

    def test_disconnected_is_inf(self):
        g = graph_from_ascii("..o..")
        assert g.geodesic_time((0, 0), (4, 0)) == math.inf

    def test_step_time_scales(self):
        g = open_room(5, 1)
        assert g.geodesic_time((0, 0), (4, 0), 0.5) == 2.0

    def test_step_time_must_be_positive(self):
        g = open_room(2, 1)
        with pytest.raises(ValueError):
            g.geodesic_time((0, 0), (1, 0), 0.0)


class TestBetweenness:
    def test_path_graph(self):
        g = open_room(3, 1)
        bc = g.betweenness()
        assert bc.value((1, 0)) == pytest.approx(1.0)
        assert bc.value((0, 0)) == 0.0
        assert bc.value((2, 0)) == 0.0

    def test_four_cycle_matches_oracle(self):
        g = open_room(2, 2)
        oracle = brute_force_betweenness(g)
        bc = g.betweenness()
        for cell, expect in oracle.items():
            assert bc.value(cell) == pytest.approx(expect, abs=1e-12)
        # ordered-pair normalizer: two opposite pairs through each corner
        assert bc.value((0, 0)) == pytest.approx(1.0 / 6.0)

    @pytest.mark.parametrize("seed", range(6))
    def test_random_grids_match_brute_force(self, seed):
        g = random_obstacle_grid(5, seed % 4 + 2, seed)
        oracle = brute_force_betweenness(g)
        bc = g.betweenness()
        for cell, expect in oracle.items():
            assert bc.value(cell) == pytest.approx(expect, abs=1e-9)

    def test_under_three_cells_all_zero(self):
        g = graph_from_ascii("..#")
        assert set(g.betweenness().values.values()) == {0.0}

    def test_values_in_unit_interval(self):
        g = random_obstacle_grid(8, 10, seed=2)
        for value in g.betweenness().values.values():
            assert 0.0 <= value <= 1.0

    def test_dead_end_is_zero(self):
        g = graph_from_ascii(
            """
....
.##.
.#..
"""
        )
        bc = g.betweenness()
        degree_one = [
            c for c in g.free_cells() if len(list(g.neighbors_free(c))) == 1
        ]
        assert degree_one
        for cell in degree_one:
            assert bc.value(cell) == 0.0

    @pytest.mark.parametrize("n", [3, 10, 25])
    def test_path_graph_closed_form_sum(self, n):
        g = open_room(n, 1)
        total = sum(g.betweenness().values.values())
        assert total == pytest.approx(n / 3.0, abs=1e-9)

    def test_cached_per_snapshot(self):
        g = open_room(4, 4)
        assert g.betweenness() is g.betweenness()
        g2 = open_room(4, 4)
        assert g2.betweenness().values == g.betweenness().values


class TestReachableSet:
    def test_open_room_reaches_everything(self):
        g = open_room(3, 3)
        for cell in g.free_cells():
            assert g.reachable_set(cell) == set(g.free_cells())

    def test_cut_corridor(self):
        g = graph_from_ascii("..o..")
        assert g.reachable_set((0, 0)) == {(0, 0), (1, 0)}

    @pytest.mark.parametrize("seed", range(4))
    def test_matches_flood_fill(self, seed):
        g = random_obstacle_grid(7, 10, seed)
        src = g.free_cells()[0]
        assert g.reachable_set(src) == flood_fill(g, src)


class TestInvariants:
    @given(st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_distance_symmetry(self, seed):
        g = random_obstacle_grid(6, 7, seed)
        rng = random.Random(seed)
        free = g.free_cells()
        for _ in range(5):
            a, b = rng.choice(free), rng.choice(free)
            assert g.geodesic_time(a, b) == g.geodesic_time(b, a)

    @given(st.integers(0, 10_000))
    @settings(max_examples=15, deadline=None)
    def test_triangle_inequality(self, seed):
        g = random_obstacle_grid(6, 5, seed)
        rng = random.Random(seed)
        free = g.free_cells()
        for _ in range(5):
            a, b, c = (rng.choice(free) for _ in range(3))
            ab, bc, ac = g.geodesic_time(a, b), g.geodesic_time(b, c), g.geodesic_time(a, c)
            if math.isinf(ab) or math.isinf(bc):
                continue
            assert ac <= ab + bc

    def test_adding_obstacle_never_shortens_distances(self):
        rng = random.Random(11)
        for trial in range(10):
            g = random_obstacle_grid(6, 4, seed=trial)
            free = g.free_cells()
            removed = rng.choice(free)
            g2 = g.with_obstacle(removed, "obs_x")
            survivors = [c for c in free if c != removed]
            for _ in range(10):
                a, b = rng.choice(survivors), rng.choice(survivors)
                before = g.geodesic_time(a, b)
                after = g2.geodesic_time(a, b)
                if math.isinf(before):
                    continue
                assert after >= before

    def test_snapshot_mutation_returns_new_graph(self):
        g = open_room(3, 3)
        g2 = g.with_obstacle((1, 1), "obs_0")
        assert g.is_free((1, 1))
        assert not g2.is_free((1, 1))
        assert g.snapshot_id != g2.snapshot_id
        g3 = g2.with_cell_free((1, 1))
        assert g3.snapshot_id == g.snapshot_id

"""Spatial substrate: floorplans, traversability grid graphs, paths, centrality.

Cells are ``(x, y)`` pairs with ``x`` the column and ``y`` the row. All path
and connectivity math in the package runs on 4-connected lattices of Free
cells. Graph snapshots are immutable: mutation helpers return a new graph, so
snapshots can be shared read-only across concurrent episode workers.
"""

from __future__ import annotations

import hashlib
import math
from collections import OrderedDict, deque
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

Cell = tuple[int, int]

ROOM_TYPES = ("Kitchen", "LivingRoom", "Bedroom", "Bathroom", "Hallway", "Office")

# Neighbor offsets in (y, then x) scan order. The order is load-bearing: BFS
# predecessor assignment under this ordering defines the canonical shortest
# path used for blocking relations and replayable tie-breaking.
_NEIGHBOR_STEPS = ((0, -1), (-1, 0), (1, 0), (0, 1))

DEFAULT_RESOLUTION_M = 0.25


class CellState(IntEnum):
    FREE = 0
    WALL = 1
    OBSTACLE = 2
    FIXTURE = 3


class PlacementError(ValueError):
    """An object placement is incompatible with the floorplan."""


@dataclass(frozen=True)
class Room:
    id: str
    type: str
    cells: frozenset[Cell]


@dataclass(frozen=True)
class Door:
    room_a: str
    room_b: str
    cell: Cell


@dataclass(frozen=True)
class Floorplan:
    """Static layout: room interiors, 1-cell doorways, and wall cells.

    Every cell of the width x height lattice is exactly one of: room
    interior, doorway, or wall. ``resolution_m`` only converts path lengths
    to meters for reporting; planning is in cells.
    """

    width: int
    height: int
    rooms: tuple[Room, ...]
    doors: tuple[Door, ...]
    walls: frozenset[Cell]
    resolution_m: float = DEFAULT_RESOLUTION_M

    def __post_init__(self) -> None:
        seen: set[Cell] = set()
        for room in self.rooms:
            if seen & room.cells:
                raise ValueError(f"room {room.id} overlaps another room")
            seen |= room.cells
        for door in self.doors:
            if door.cell in seen or door.cell in self.walls:
                raise ValueError(f"door cell {door.cell} is not on a wall gap")

    @property
    def rooms_by_id(self) -> dict[str, Room]:
        return {room.id: room for room in self.rooms}

    @property
    def door_cells(self) -> frozenset[Cell]:
        return frozenset(door.cell for door in self.doors)

    def room_of(self, cell: Cell) -> Room | None:
        for room in self.rooms:
            if cell in room.cells:
                return room
        return None

    def doors_of_room(self, room_id: str) -> list[Door]:
        return [d for d in self.doors if room_id in (d.room_a, d.room_b)]

    def traversable_candidates(self) -> set[Cell]:
        """Cells that are walkable when nothing is placed: interiors + doors."""
        cells: set[Cell] = set()
        for room in self.rooms:
            cells |= room.cells
        cells |= set(self.door_cells)
        return cells

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "resolution_m": self.resolution_m,
            "rooms": [
                {"id": r.id, "type": r.type, "cells": sorted(map(list, r.cells))}
                for r in self.rooms
            ],
            "doors": [
                {"a": d.room_a, "b": d.room_b, "cell": list(d.cell)} for d in self.doors
            ],
            "walls": sorted(map(list, self.walls)),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Floorplan":
        rooms = tuple(
            Room(r["id"], r["type"], frozenset(tuple(c) for c in r["cells"]))
            for r in data["rooms"]
        )
        doors = tuple(Door(d["a"], d["b"], tuple(d["cell"])) for d in data["doors"])
        walls = frozenset(tuple(c) for c in data["walls"])
        return cls(
            width=data["width"],
            height=data["height"],
            rooms=rooms,
            doors=doors,
            walls=walls,
            resolution_m=data.get("resolution_m", DEFAULT_RESOLUTION_M),
        )


@dataclass(frozen=True)
class CentralityMap:
    """Normalized betweenness per Free cell of one graph snapshot.

    Values are in [0, 1] under the ordered-pair normalizer
    Z = (n_free - 1)(n_free - 2). Cells absent from the map (occupied or
    outside the snapshot) read as 0.
    """

    values: Mapping[Cell, float]
    snapshot_id: str

    def value(self, cell: Cell) -> float:
        return self.values.get(cell, 0.0)


@dataclass
class DistanceField:
    """BFS result from one source: step counts and canonical predecessors."""

    source: Cell
    width: int
    dist: np.ndarray  # (h, w) int32, -1 unreachable
    pred: np.ndarray  # (h, w) int32 packed y*width+x, -1 for source/unreachable

    def steps_to(self, cell: Cell) -> int | None:
        d = int(self.dist[cell[1], cell[0]])
        return None if d < 0 else d

    def path_to(self, dst: Cell) -> list[Cell] | None:
        if self.steps_to(dst) is None:
            return None
        path = [dst]
        cur = dst
        while cur != self.source:
            packed = int(self.pred[cur[1], cur[0]])
            cur = (packed % self.width, packed // self.width)
            path.append(cur)
        path.reverse()
        return path


_BC_CACHE: OrderedDict[str, CentralityMap] = OrderedDict()
_BC_CACHE_MAX = 128


class GridGraph:
    """Immutable traversability snapshot over a floorplan.

    Edges exist implicitly between 4-adjacent Free cells. ``occupants`` maps
    Obstacle/Fixture cells to the id of the single object occupying them.
    """

    __slots__ = ("floorplan", "states", "occupants", "snapshot_id", "_free_cells")

    def __init__(self, floorplan: Floorplan, states: np.ndarray, occupants: dict[Cell, str]):
        states = np.ascontiguousarray(states, dtype=np.uint8)
        states.setflags(write=False)
        self.floorplan = floorplan
        self.states = states
        self.occupants = dict(occupants)
        self.snapshot_id = hashlib.blake2b(states.tobytes(), digest_size=16).hexdigest()
        self._free_cells: list[Cell] | None = None

    @classmethod
    def build(
        cls,
        floorplan: Floorplan,
        obstacles: Mapping[Cell, str] | None = None,
        fixtures: Mapping[Cell, str] | None = None,
    ) -> "GridGraph":
        states = np.full((floorplan.height, floorplan.width), CellState.WALL, dtype=np.uint8)
        for cell in floorplan.traversable_candidates():
            states[cell[1], cell[0]] = CellState.FREE
        occupants: dict[Cell, str] = {}
        for mapping, state in ((fixtures, CellState.FIXTURE), (obstacles, CellState.OBSTACLE)):
            for cell, oid in (mapping or {}).items():
                if not floorplan.in_bounds(cell):
                    raise PlacementError(f"{oid}: cell {cell} outside floorplan")
                if states[cell[1], cell[0]] != CellState.FREE:
                    raise PlacementError(f"{oid}: cell {cell} is not placeable")
                states[cell[1], cell[0]] = state
                occupants[cell] = oid
        return cls(floorplan, states, occupants)

    # -- cell queries -------------------------------------------------------

    def state(self, cell: Cell) -> CellState:
        return CellState(self.states[cell[1], cell[0]])

    def is_free(self, cell: Cell) -> bool:
        return self.states[cell[1], cell[0]] == CellState.FREE

    def occupant(self, cell: Cell) -> str | None:
        return self.occupants.get(cell)

    def free_cells(self) -> list[Cell]:
        if self._free_cells is None:
            ys, xs = np.nonzero(self.states == CellState.FREE)
            self._free_cells = [(int(x), int(y)) for y, x in zip(ys, xs)]
        return self._free_cells

    @property
    def n_free(self) -> int:
        return len(self.free_cells())

    def neighbors_free(self, cell: Cell) -> Iterator[Cell]:
        x, y = cell
        h, w = self.states.shape
        for dy, dx in _NEIGHBOR_STEPS:
            nx, ny = x + dx, y + dy
            if 0 <= nx < w and 0 <= ny < h and self.states[ny, nx] == CellState.FREE:
                yield (nx, ny)

    # -- snapshot mutation --------------------------------------------------

    def with_cell_free(self, cell: Cell) -> "GridGraph":
        states = np.array(self.states)
        states[cell[1], cell[0]] = CellState.FREE
        occupants = {c: o for c, o in self.occupants.items() if c != cell}
        return GridGraph(self.floorplan, states, occupants)

    def with_obstacle(self, cell: Cell, oid: str) -> "GridGraph":
        if self.states[cell[1], cell[0]] != CellState.FREE:
            raise PlacementError(f"{oid}: cell {cell} is not free")
        states = np.array(self.states)
        states[cell[1], cell[0]] = CellState.OBSTACLE
        occupants = dict(self.occupants)
        occupants[cell] = oid
        return GridGraph(self.floorplan, states, occupants)

    # -- paths --------------------------------------------------------------

    def distance_field(self, src: Cell) -> DistanceField:
        """Single-source BFS with canonical (y, then x) predecessor ties."""
        if not self.is_free(src):
            raise ValueError(f"source {src} is not a Free cell")
        h, w = self.states.shape
        dist = np.full((h, w), -1, dtype=np.int32)
        pred = np.full((h, w), -1, dtype=np.int32)
        dist[src[1], src[0]] = 0
        states = self.states
        queue: deque[Cell] = deque([src])
        while queue:
            x, y = queue.popleft()
            base = dist[y, x] + 1
            packed = y * w + x
            for dy, dx in _NEIGHBOR_STEPS:
                nx, ny = x + dx, y + dy
                if 0 <= nx < w and 0 <= ny < h and states[ny, nx] == CellState.FREE:
                    if dist[ny, nx] < 0:
                        dist[ny, nx] = base
                        pred[ny, nx] = packed
                        queue.append((nx, ny))
        return DistanceField(src, w, dist, pred)

    def shortest_path(self, src: Cell, dst: Cell) -> list[Cell] | None:
        if not self.is_free(src) or not self.is_free(dst):
            raise ValueError(f"endpoints must be Free cells: {src} -> {dst}")
        if src == dst:
            return [src]
        return self.distance_field(src).path_to(dst)

    def geodesic_time(self, a: Cell, b: Cell, step_time: float = 1.0) -> float:
        if step_time <= 0:
            raise ValueError("step_time must be positive")
        if a == b:
            if not self.is_free(a):
                raise ValueError(f"cell {a} is not a Free cell")
            return 0.0
        path = self.shortest_path(a, b)
        if path is None:
            return math.inf
        return (len(path) - 1) * step_time

    def reachable_set(self, src: Cell) -> set[Cell]:
        if not self.is_free(src):
            raise ValueError(f"source {src} is not a Free cell")
        field = self.distance_field(src)
        ys, xs = np.nonzero(field.dist >= 0)
        return {(int(x), int(y)) for y, x in zip(ys, xs)}

    def is_connected(self) -> bool:
        free = self.free_cells()
        if len(free) <= 1:
            return True
        return len(self.reachable_set(free[0])) == len(free)

    def diameter_estimate(self) -> int:
        """Double-sweep BFS lower bound on the free-graph diameter."""
        free = self.free_cells()
        if not free:
            return 0
        first = self.distance_field(free[0]).dist
        far = int(np.argmax(first))
        h, w = self.states.shape
        second = self.distance_field((far % w, far // w)).dist
        return int(second.max())

    # -- centrality -----------------------------------------------------------

    def betweenness(self) -> CentralityMap:
        """Normalized betweenness over ordered Free-cell pairs.

        bc(v) = (1/Z) * sum over ordered pairs s != t, both != v, of
        sigma_st(v) / sigma_st, with Z = (n-1)(n-2). Computed by a
        level-synchronized accumulation over all sources at once; cached per
        snapshot id so repeated scene updates on an unchanged graph are free.
        """
        cached = _BC_CACHE.get(self.snapshot_id)
        if cached is not None:
            _BC_CACHE.move_to_end(self.snapshot_id)
            return cached
        free = self.free_cells()
        n = len(free)
        if n < 3:
            result = CentralityMap({c: 0.0 for c in free}, self.snapshot_id)
        else:
            result = CentralityMap(self._betweenness_values(free), self.snapshot_id)
        _BC_CACHE[self.snapshot_id] = result
        while len(_BC_CACHE) > _BC_CACHE_MAX:
            _BC_CACHE.popitem(last=False)
        return result

    def _betweenness_values(self, free: list[Cell]) -> dict[Cell, float]:
        n = len(free)
        index = {cell: i for i, cell in enumerate(free)}
        rows: list[int] = []
        cols: list[int] = []
        for cell, i in index.items():
            for nb in self.neighbors_free(cell):
                rows.append(i)
                cols.append(index[nb])
        adj = sp.csr_array(
            (np.ones(len(rows)), (np.array(rows), np.array(cols))), shape=(n, n)
        )

        dist = np.full((n, n), -1, dtype=np.int32)
        np.fill_diagonal(dist, 0)
        sigma = np.zeros((n, n))
        np.fill_diagonal(sigma, 1.0)
        frontier = np.eye(n)
        level = 0
        while True:
            reached = (adj @ frontier.T).T
            newly = (reached > 0) & (dist < 0)
            if not newly.any():
                break
            level += 1
            dist[newly] = level
            sigma[newly] = reached[newly]
            frontier = np.where(newly, sigma, 0.0)

        # Reverse-level dependency accumulation (per-source deltas, all
        # sources in one matrix). Shortest-path DAG edges only connect
        # consecutive BFS levels, so masking by level isolates predecessors.
        delta = np.zeros((n, n))
        for lvl in range(level, 0, -1):
            at_lvl = dist == lvl
            coeff = np.where(at_lvl, (1.0 + delta) / np.where(at_lvl, sigma, 1.0), 0.0)
            spread = (adj @ coeff.T).T
            at_prev = dist == lvl - 1
            delta = np.where(at_prev, delta + sigma * spread, delta)

        totals = delta.sum(axis=0) - np.diag(delta)
        z = float((n - 1) * (n - 2))
        return {cell: float(totals[i] / z) for cell, i in index.items()}


def build_grid_graph(
    floorplan: Floorplan,
    obstacles: Mapping[Cell, str] | None = None,
    fixtures: Mapping[Cell, str] | None = None,
) -> GridGraph:
    return GridGraph.build(floorplan, obstacles, fixtures)


def all_pairs_distances(graph: GridGraph, cells: Sequence[Cell]) -> np.ndarray:
    """Pairwise shortest-path step counts between ``cells``; -1 if disconnected.

    Cells that are not Free in ``graph`` get -1 rows/columns everywhere
    (except the zero diagonal handled by the caller's pair universe).
    """
    free = graph.free_cells()
    index = {cell: i for i, cell in enumerate(free)}
    rows: list[int] = []
    cols: list[int] = []
    for cell, i in index.items():
        for nb in graph.neighbors_free(cell):
            rows.append(i)
            cols.append(index[nb])
    n = len(free)
    adj = sp.csr_array((np.ones(len(rows)), (np.array(rows), np.array(cols))), shape=(n, n))
    wanted = [index.get(c, -1) for c in cells]
    present = [i for i in wanted if i >= 0]
    out = np.full((len(cells), len(cells)), -1.0)
    if present:
        dmat = csgraph.shortest_path(adj, method="D", unweighted=True, indices=present)
        by_node = {node: r for node, r in zip(present, dmat)}
        for a, ia in enumerate(wanted):
            if ia < 0:
                continue
            row = by_node[ia]
            for b, ib in enumerate(wanted):
                if ib < 0:
                    continue
                d = row[ib]
                out[a, b] = -1.0 if np.isinf(d) else float(d)
    return out

"""Simulated omnidirectional sensing and the agent's partial-map belief.

The sensor reveals every cell within Chebyshev range whose center-to-center
grid ray is unblocked; blocking cells are themselves visible (you see the
obstacle, not behind it). Rays use a supercover traversal, so a ray grazing
a lattice corner is blocked if either corner-adjacent cell blocks.

The floor plan (walls, room extents, doorway positions, drop zones) is known
a priori; room contents and passage traversability must be observed. Belief
cells therefore start Unknown except for walls, and no downstream path query
ever treats an Unknown cell as traversable.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Iterable, Mapping

import numpy as np

from .dataset import DropZone, ObjectKind, ObjectSpec
from .grid import Cell, CellState, Floorplan, GridGraph

UNKNOWN = 4  # belief-only cell code, alongside CellState values

ROOM_EXPLORED_FRACTION = 0.9


class RoomStatus(IntEnum):
    UNEXPLORED = 0
    PARTIAL = 1
    EXPLORED = 2


@dataclass(frozen=True)
class SensorConfig:
    range: int = 5


@dataclass(frozen=True)
class TrackedObject:
    """An object plus its dynamic placement state.

    ``state`` is one of ``placed`` (at ``cell``; obstacles and receptacles
    occupy it), ``carried`` (held by the robot), or ``stowed`` (retired to a
    drop zone rack at ``cell``; occupies nothing).
    """

    spec: ObjectSpec
    cell: Cell
    state: str = "placed"

    @property
    def id(self) -> str:
        return self.spec.id

    @property
    def occupying(self) -> bool:
        if self.state != "placed":
            return False
        return self.spec.kind in (ObjectKind.OBSTACLE, ObjectKind.RECEPTACLE)


@dataclass(frozen=True)
class Observation:
    robot: Cell
    timestep: int
    cells: dict[Cell, tuple[int, str | None]]  # cell -> (state code, occupant id)
    objects: tuple[TrackedObject, ...]

    def to_record(self) -> dict:
        return {
            "t": self.timestep,
            "robot": list(self.robot),
            "cells": sorted([x, y, int(s)] for (x, y), (s, _) in self.cells.items()),
            "objects": sorted(o.id for o in self.objects),
        }


def supercover_line(a: Cell, b: Cell) -> list[Cell]:
    """All cells touched by the center-to-center segment from a to b.

    Exact corner crossings include both corner-adjacent cells, making
    occlusion checks conservative at diagonal squeezes.
    """
    x, y = a
    x1, y1 = b
    dx, dy = x1 - x, y1 - y
    sx = 1 if dx > 0 else -1
    sy = 1 if dy > 0 else -1
    nx, ny = abs(dx), abs(dy)
    cells = [a]
    ix = iy = 0
    while ix < nx or iy < ny:
        # Compare (ix + 0.5)/nx vs (iy + 0.5)/ny without division.
        tx = (2 * ix + 1) * ny
        ty = (2 * iy + 1) * nx
        if tx == ty:
            cells.append((x + sx, y))
            cells.append((x, y + sy))
            x += sx
            y += sy
            ix += 1
            iy += 1
        elif nx > 0 and (ny == 0 or tx < ty):
            x += sx
            ix += 1
        else:
            y += sy
            iy += 1
        cells.append((x, y))
    return cells


def observe(
    graph: GridGraph,
    objects: Iterable[TrackedObject],
    robot: Cell,
    sensor: SensorConfig,
    timestep: int,
) -> Observation:
    """360-degree line-of-sight snapshot of the ground truth around ``robot``."""
    if not graph.is_free(robot):
        raise ValueError(f"robot cell {robot} is not free in the world")
    h, w = graph.states.shape
    rx, ry = robot
    r = sensor.range
    blocking = (CellState.WALL, CellState.OBSTACLE, CellState.FIXTURE)
    visible: dict[Cell, tuple[int, str | None]] = {}
    for y in range(max(0, ry - r), min(h, ry + r + 1)):
        for x in range(max(0, rx - r), min(w, rx + r + 1)):
            cell = (x, y)
            ray = supercover_line(robot, cell)
            clear = True
            for mid in ray[:-1]:
                if mid == robot or mid == cell:
                    continue
                if graph.state(mid) in blocking:
                    clear = False
                    break
            if clear:
                visible[cell] = (int(graph.state(cell)), graph.occupant(cell))
    seen_objects = tuple(
        obj for obj in objects if obj.state != "carried" and obj.cell in visible
    )
    return Observation(robot=robot, timestep=timestep, cells=visible, objects=seen_objects)


class Belief:
    """The agent's partial map: cell states, discovered objects, room status.

    Immutable by convention: ``integrate`` and the self-action updates return
    new instances, so snapshots can be logged or handed to reasoners safely.
    """

    def __init__(
        self,
        floorplan: Floorplan,
        cells: np.ndarray,
        occupants: dict[Cell, str],
        objects: dict[str, TrackedObject],
        room_status: dict[str, RoomStatus],
        drop_zones: tuple[DropZone, ...],
        timestep: int = 0,
    ):
        cells = np.ascontiguousarray(cells, dtype=np.uint8)
        cells.setflags(write=False)
        self.floorplan = floorplan
        self.cells = cells
        self.occupants = occupants
        self.objects = objects
        self.room_status = room_status
        self.drop_zones = drop_zones
        self.timestep = timestep
        self._strict: GridGraph | None = None
        self._relaxed: GridGraph | None = None

    # -- constructors ---------------------------------------------------------

    @classmethod
    def initial(cls, floorplan: Floorplan, drop_zones: tuple[DropZone, ...]) -> "Belief":
        cells = np.full((floorplan.height, floorplan.width), UNKNOWN, dtype=np.uint8)
        for x, y in floorplan.walls:
            cells[y, x] = CellState.WALL
        status = {room.id: RoomStatus.UNEXPLORED for room in floorplan.rooms}
        return cls(floorplan, cells, {}, {}, status, drop_zones)

    @classmethod
    def full(
        cls,
        graph: GridGraph,
        objects: Mapping[str, TrackedObject],
        drop_zones: tuple[DropZone, ...],
        timestep: int = 0,
    ) -> "Belief":
        status = {room.id: RoomStatus.EXPLORED for room in graph.floorplan.rooms}
        return cls(
            graph.floorplan,
            np.array(graph.states),
            dict(graph.occupants),
            dict(objects),
            status,
            drop_zones,
            timestep,
        )

    # -- queries --------------------------------------------------------------

    def cell_code(self, cell: Cell) -> int:
        return int(self.cells[cell[1], cell[0]])

    def knows(self, cell: Cell) -> bool:
        return self.cell_code(cell) != UNKNOWN

    def known_cells(self) -> set[Cell]:
        ys, xs = np.nonzero(self.cells != UNKNOWN)
        return {(int(x), int(y)) for y, x in zip(ys, xs)}

    def strict_graph(self) -> GridGraph:
        """Belief traversability with every known obstacle cell blocked."""
        if self._strict is None:
            states = np.where(self.cells == CellState.FREE, CellState.FREE, CellState.WALL)
            states = states.astype(np.uint8)
            for cell, oid in self.occupants.items():
                states[cell[1], cell[0]] = self.cells[cell[1], cell[0]]
            self._strict = GridGraph(self.floorplan, states, dict(self.occupants))
        return self._strict

    def relaxed_graph(self) -> GridGraph:
        """Belief traversability with movable obstacle cells passable."""
        if self._relaxed is None:
            base = self.strict_graph()
            states = np.array(base.states)
            occupants = {}
            for cell, oid in self.occupants.items():
                if self.cells[cell[1], cell[0]] == CellState.OBSTACLE:
                    states[cell[1], cell[0]] = CellState.FREE
                else:
                    occupants[cell] = oid
            self._relaxed = GridGraph(self.floorplan, states, occupants)
        return self._relaxed

    # -- updates ----------------------------------------------------------------

    def integrate(self, obs: Observation) -> "Belief":
        """Fold one observation in; monotone in known cells and objects."""
        if obs.timestep < self.timestep:
            raise ValueError("observation is older than the belief")
        cells = np.array(self.cells)
        occupants = dict(self.occupants)
        for (x, y), (state, oid) in obs.cells.items():
            occupants.pop((x, y), None)
            cells[y, x] = state
            if oid is not None:
                occupants[(x, y)] = oid
        objects = dict(self.objects)
        for obj in obs.objects:
            objects[obj.id] = obj
        status = dict(self.room_status)
        touched_rooms = {
            room.id
            for room in self.floorplan.rooms
            if any(cell in obs.cells for cell in room.cells)
        }
        for room in self.floorplan.rooms:
            if room.id not in touched_rooms:
                continue
            known = sum(1 for (x, y) in room.cells if cells[y, x] != UNKNOWN)
            frac = known / len(room.cells)
            new = RoomStatus.EXPLORED if frac >= ROOM_EXPLORED_FRACTION else RoomStatus.PARTIAL
            status[room.id] = max(status[room.id], new)
        return Belief(
            self.floorplan, cells, occupants, objects, status, self.drop_zones, obs.timestep
        )

    def with_object_moved(self, obj: TrackedObject) -> "Belief":
        """Self-action update: the agent knows the effect of its own pick/place."""
        cells = np.array(self.cells)
        occupants = dict(self.occupants)
        previous = self.objects.get(obj.id)
        if previous is not None and occupants.get(previous.cell) == obj.id:
            del occupants[previous.cell]
            cells[previous.cell[1], previous.cell[0]] = CellState.FREE
        if obj.occupying:
            state = (
                CellState.OBSTACLE
                if obj.spec.kind == ObjectKind.OBSTACLE
                else CellState.FIXTURE
            )
            cells[obj.cell[1], obj.cell[0]] = state
            occupants[obj.cell] = obj.id
        objects = dict(self.objects)
        objects[obj.id] = obj
        return Belief(
            self.floorplan, cells, occupants, objects, dict(self.room_status),
            self.drop_zones, self.timestep,
        )

    def at_time(self, timestep: int) -> "Belief":
        return Belief(
            self.floorplan, self.cells, self.occupants, self.objects,
            self.room_status, self.drop_zones, timestep,
        )

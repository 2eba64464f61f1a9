"""Scene graph: discovered objects with attributes, blocking edges, frontiers.

``update`` recomputes everything from a belief snapshot and the robot cell,
so the result is a pure function of its inputs. Route costs come in two
flavors: path_cost/blockers on the relaxed graph (movable obstacle cells
passable, so the ideal route and what blocks it are visible) and detour_cost
on the strict graph (every known obstacle blocked). Centrality is evaluated
on the relaxed belief graph, where occupied cells are nodes, so an
obstacle's cell has a defined score.

The text serialization is the reasoner API contract: deterministic,
line-oriented, and stable, because it doubles as the body of external
language-model prompts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import DropZone, ObjectKind
from .grid import Cell, CentralityMap, DistanceField, GridGraph
from .perception import UNKNOWN, Belief, RoomStatus, TrackedObject


class UnknownObjectError(LookupError):
    """A scene-graph query referenced an undiscovered object id."""


@dataclass(frozen=True)
class TaskView:
    """What the agent is told about the current task: ids plus categories."""

    object_id: str
    object_category: str
    receptacle_id: str
    receptacle_category: str


def route_via_field(
    graph: GridGraph, fieldmap: DistanceField, target: Cell
) -> tuple[float | None, list[Cell] | None]:
    """Steps and canonical path to ``target``, entering it if occupied.

    Occupied targets are reached through their nearest free neighbor (ties
    by (y, x)) plus one entering step, so costs to obstacles and fixtures
    are well defined.
    """
    if target == fieldmap.source:
        return 0.0, [target]
    if graph.is_free(target):
        steps = fieldmap.steps_to(target)
        if steps is None:
            return None, None
        return float(steps), fieldmap.path_to(target)
    best: tuple[int, Cell] | None = None
    for nb in graph.neighbors_free(target):
        steps = fieldmap.steps_to(nb)
        if steps is None:
            continue
        if best is None or (steps, nb[1], nb[0]) < (best[0], best[1][1], best[1][0]):
            best = (steps, nb)
    if best is None:
        return None, None
    path = fieldmap.path_to(best[1])
    assert path is not None
    return float(best[0] + 1), path + [target]


def route_between(
    graph: GridGraph, src: Cell, target: Cell
) -> tuple[float | None, list[Cell] | None]:
    if not graph.is_free(src):
        return None, None
    return route_via_field(graph, graph.distance_field(src), target)


@dataclass
class ObjectAttributes:
    """Per-object navigability context; centrality is filled lazily."""

    path_cost: float | None
    blockers: frozenset[str]
    detour_cost: float | None
    _scene: "SceneGraph" = field(repr=False)
    _cell: Cell = field(repr=False)

    @property
    def centrality(self) -> float:
        return self._scene.centrality_at(self._cell)


@dataclass(frozen=True)
class FrontierRoom:
    room_id: str
    room_type: str
    status: RoomStatus
    approach_time: float  # inf when no known route to any doorway
    frontier_steps: float = math.inf  # steps to the nearest cell that can reveal the room


class SceneGraph:
    """Immutable snapshot of the agent's world model at one timestep."""

    def __init__(
        self,
        belief: Belief,
        robot: Cell,
        step_time: float = 1.0,
    ):
        self.robot = robot
        self.timestep = belief.timestep
        self.floorplan = belief.floorplan
        self.step_time = step_time
        self.room_status = dict(belief.room_status)
        self.drop_zones = belief.drop_zones
        self.objects: dict[str, TrackedObject] = dict(belief.objects)
        self.strict = belief.strict_graph()
        self.relaxed = belief.relaxed_graph()
        self._unknown_cells = frozenset(
            (int(x), int(y))
            for y, x in zip(*np.nonzero(belief.cells == UNKNOWN))
        )
        self._centrality: CentralityMap | None = None
        self._strict_field = self.strict.distance_field(robot)
        self._relaxed_field = self.relaxed.distance_field(robot)
        self.attributes: dict[str, ObjectAttributes] = {}
        for oid, obj in sorted(self.objects.items()):
            self.attributes[oid] = self._attributes_for(obj)
        self._zone_reachable = {
            z.id: route_via_field(self.strict, self._strict_field, z.cell)[0] is not None
            for z in self.drop_zones
        }

    # -- attribute computation ----------------------------------------------

    def blockers_on(self, path: list[Cell] | None, target: Cell | None = None) -> frozenset[str]:
        """Ids of placed movable obstacles whose cells lie on ``path``."""
        if not path:
            return frozenset()
        found = set()
        for cell in path:
            if cell == target:
                continue
            obj = self.objects.get(self.strict.occupant(cell) or "")
            if obj is not None and obj.spec.kind == ObjectKind.OBSTACLE and obj.occupying:
                found.add(obj.id)
        return frozenset(found)

    def _attributes_for(self, obj: TrackedObject) -> ObjectAttributes:
        if obj.state == "carried":
            return ObjectAttributes(0.0, frozenset(), 0.0, self, self.robot)
        relaxed_steps, relaxed_path = route_via_field(self.relaxed, self._relaxed_field, obj.cell)
        strict_steps, _ = route_via_field(self.strict, self._strict_field, obj.cell)
        return ObjectAttributes(
            path_cost=None if relaxed_steps is None else relaxed_steps * self.step_time,
            blockers=self.blockers_on(relaxed_path, obj.cell),
            detour_cost=None if strict_steps is None else strict_steps * self.step_time,
            _scene=self,
            _cell=obj.cell,
        )

    # -- queries ---------------------------------------------------------------

    @property
    def unknown_cells(self) -> frozenset[Cell]:
        return self._unknown_cells

    def nearest_revealing_cell(self) -> tuple[float, Cell, Cell] | None:
        """Nearest reachable free cell adjacent to any Unknown cell.

        Returns (steps, free cell, the unknown cell it would reveal); None
        when every remaining Unknown cell is sealed behind known blockers.
        """
        best: tuple[float, Cell, Cell] | None = None
        for cell in self.strict.free_cells():
            steps = self._strict_field.steps_to(cell)
            if steps is None:
                continue
            x, y = cell
            for nb in ((x, y - 1), (x - 1, y), (x + 1, y), (x, y + 1)):
                if nb in self._unknown_cells:
                    key = (float(steps), (cell[1], cell[0]))
                    if best is None or key < (best[0], (best[1][1], best[1][0])):
                        best = (float(steps), cell, nb)
        return best

    def centrality_at(self, cell: Cell) -> float:
        if self._centrality is None:
            self._centrality = self.relaxed.betweenness()
        return self._centrality.value(cell)

    def has_object(self, oid: str) -> bool:
        return oid in self.objects

    def require(self, oid: str) -> TrackedObject:
        obj = self.objects.get(oid)
        if obj is None:
            raise UnknownObjectError(f"object {oid!r} is not in the scene graph")
        return obj

    def blocking(self, blocker_id: str, target_id: str) -> bool:
        """True iff ``blocker_id`` lies on the canonical relaxed path to ``target_id``."""
        self.require(blocker_id)
        self.require(target_id)
        return blocker_id in self.attributes[target_id].blockers

    def blocking_edges(self) -> list[tuple[str, str]]:
        edges = []
        for target, attrs in sorted(self.attributes.items()):
            for blocker in sorted(attrs.blockers):
                edges.append((blocker, target))
        return edges

    def occupying_obstacles(self) -> list[TrackedObject]:
        return [
            o
            for o in sorted(self.objects.values(), key=lambda o: o.id)
            if o.spec.kind == ObjectKind.OBSTACLE and o.occupying
        ]

    def zone_reachable(self, zone_id: str) -> bool:
        return self._zone_reachable.get(zone_id, False)

    def zone_by_id(self, zone_id: str) -> DropZone:
        for zone in self.drop_zones:
            if zone.id == zone_id:
                return zone
        raise UnknownObjectError(f"drop zone {zone_id!r} is unknown")

    def route_to(self, target: Cell, graph: str = "strict") -> tuple[float | None, list[Cell] | None]:
        """Steps and canonical path from the robot on the chosen belief graph."""
        if graph == "strict":
            return route_via_field(self.strict, self._strict_field, target)
        return route_via_field(self.relaxed, self._relaxed_field, target)

    def _frontier_steps(self) -> dict[str, float]:
        """Per frontier room, steps to the nearest free cell that can reveal it.

        A cell reveals a room when one of its 4-neighbors is an Unknown cell
        of that room (or of one of its doorways). Infinite when every such
        approach is sealed by known obstacles or walls.
        """
        pending = [r for r in self.floorplan.rooms if self.room_status[r.id] != RoomStatus.EXPLORED]
        owner: dict[Cell, list[str]] = {}
        for room in pending:
            for cell in room.cells:
                owner.setdefault(cell, []).append(room.id)
            for door in self.floorplan.doors_of_room(room.id):
                owner.setdefault(door.cell, []).append(room.id)
        best = {room.id: math.inf for room in pending}
        if not owner or not self._unknown_cells:
            return best
        for cell in self.strict.free_cells():
            steps = self._strict_field.steps_to(cell)
            if steps is None:
                continue
            x, y = cell
            for nb in ((x, y - 1), (x - 1, y), (x + 1, y), (x, y + 1)):
                if nb in self._unknown_cells:
                    for rid in owner.get(nb, ()):
                        if steps < best[rid]:
                            best[rid] = float(steps)
        return best

    def frontier_rooms(self) -> list[FrontierRoom]:
        """Known rooms not yet Explored, nearest and most-started first."""
        robot_room = self.floorplan.room_of(self.robot)
        frontier_steps = self._frontier_steps()
        entries = []
        for room in self.floorplan.rooms:
            status = self.room_status[room.id]
            if status == RoomStatus.EXPLORED:
                continue
            if robot_room is not None and room.id == robot_room.id:
                time = 0.0
            else:
                times = []
                for door in self.floorplan.doors_of_room(room.id):
                    if self.strict.is_free(door.cell):
                        steps = self._strict_field.steps_to(door.cell)
                        if steps is not None:
                            times.append(steps * self.step_time)
                time = min(times) if times else math.inf
            entries.append(
                FrontierRoom(room.id, room.type, status, time, frontier_steps[room.id])
            )
        # Partially explored rooms are already accessible and cheap to finish,
        # so they sort ahead of fully unknown ones.
        rank = {RoomStatus.PARTIAL: 0, RoomStatus.UNEXPLORED: 1}
        entries.sort(key=lambda e: (rank[e.status], e.approach_time, e.room_id))
        return entries


def update(belief: Belief, robot: Cell, step_time: float = 1.0) -> SceneGraph:
    """Rebuild the scene graph from a belief snapshot and the robot cell."""
    return SceneGraph(belief, robot, step_time)


# ---------------------------------------------------------------------------
# Text serialization (the reasoner API contract)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SerializeOptions:
    history_length: int = 3
    centrality_style: str = "numeric"  # or "bucket"


def _fmt_cost(value: float | None) -> str:
    return "none" if value is None else f"{value:.1f}"


def _fmt_centrality(value: float, style: str) -> str:
    if style == "bucket":
        if value >= 0.2:
            return "high"
        if value >= 0.05:
            return "medium"
        return "low"
    return f"{value:.2f}"


def serialize_to_text(
    scene: SceneGraph,
    task: object | None = None,
    history: Sequence[str] = (),
    options: SerializeOptions = SerializeOptions(),
) -> str:
    """Deterministic line-oriented rendering consumed by reasoners.

    Costs print with one decimal and centrality with two; parsing those
    fields back yields the source values at the printed precision.
    """
    lines: list[str] = []
    if task is None:
        lines.append("TASK: none")
    elif isinstance(task, TaskView):
        lines.append(
            f"TASK: place {task.object_category} {task.object_id}"
            f" on {task.receptacle_category} {task.receptacle_id}"
        )
    else:
        obj_id, rec_id = task[0], task[1]
        obj_cat = scene.objects[obj_id].spec.category if scene.has_object(obj_id) else "?"
        rec_cat = scene.objects[rec_id].spec.category if scene.has_object(rec_id) else "?"
        lines.append(f"TASK: place {obj_cat} {obj_id} on {rec_cat} {rec_id}")
    room = scene.floorplan.room_of(scene.robot)
    room_id = room.id if room else "none"
    lines.append(f"ROBOT: cell=({scene.robot[0]},{scene.robot[1]}) room={room_id} t={scene.timestep}")

    lines.append("OBJECTS:")
    for oid in sorted(scene.objects):
        obj = scene.objects[oid]
        attrs = scene.attributes[oid]
        room = scene.floorplan.room_of(obj.cell)
        blockers = ",".join(sorted(attrs.blockers))
        lines.append(
            f"  {oid} {obj.spec.category} {obj.spec.kind.value}"
            f" room={room.id if room else 'none'}"
            f" cell=({obj.cell[0]},{obj.cell[1]})"
            f" state={obj.state}"
            f" path_cost={_fmt_cost(attrs.path_cost)}"
            f" blockers=[{blockers}]"
            f" centrality={_fmt_centrality(attrs.centrality, options.centrality_style)}"
            f" detour_cost={_fmt_cost(attrs.detour_cost)}"
        )

    lines.append("BLOCKING:")
    for blocker, target in scene.blocking_edges():
        lines.append(f"  {blocker} blocks {target}")

    lines.append("DROP_ZONES:")
    for zone in scene.drop_zones:
        reach = "yes" if scene.zone_reachable(zone.id) else "no"
        lines.append(
            f"  {zone.id} room={zone.room_id} cell=({zone.cell[0]},{zone.cell[1]}) reachable={reach}"
        )

    lines.append("FRONTIER_ROOMS:")
    for front in scene.frontier_rooms():
        time = "none" if math.isinf(front.approach_time) else f"{front.approach_time:.1f}"
        lines.append(
            f"  {front.room_id} {front.room_type}"
            f" status={front.status.name.lower()} approach_time={time}"
        )

    lines.append("HISTORY:")
    recent = list(history)[-options.history_length :] if options.history_length > 0 else []
    for i, item in enumerate(recent, 1):
        lines.append(f"  {i}. {item}")
    return "\n".join(lines) + "\n"

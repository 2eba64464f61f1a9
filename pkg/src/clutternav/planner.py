"""High-level constraint reasoning: cost-benefit obstacle relocation.

The heuristic reasoner walks a fixed decision flow:

1. Goal entities undiscovered -> explore the frontier room whose semantic
   type best matches the missing categories.
2. Goal discovered but unreachable even through movable obstacles -> explore
   the nearest frontier room, else give up.
3. A detour (obstacle-free route) exists -> relocate the best blocking
   obstacle anyway when the cost-benefit score says clearing beats the
   detour overhead; otherwise attempt the task along the detour.
4. No detour -> relocate the best feasible (obstacle, drop zone) pair, give
   up when none is finite.

The relocation score for obstacle o and zone z is
``travel(robot->o) + 2*effort + travel(o->z) - beta * centrality(o)``:
high-centrality obstacles buy global connectivity, so they win over equally
priced low-impact ones. ``beta`` rescales the dimensionless centrality onto
the seconds scale of travel costs; the default ties it to the belief-graph
diameter so the term spans the actual cost range (``beta=1`` reproduces a
bare subtraction).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import NamedTuple, Sequence

from .grid import Cell
from .llm import LLMClient, TransportError
from .scenegraph import (
    SceneGraph,
    SerializeOptions,
    TaskView,
    UnknownObjectError,
    route_between,
    serialize_to_text,
)


class DecisionKind(str, Enum):
    ATTEMPT_TASK = "attempt_task"
    MOVE_OBSTACLE = "move_obstacle"
    DETOUR = "detour"
    EXPLORE_ROOM = "explore_room"
    GIVE_UP = "give_up"


@dataclass(frozen=True)
class Decision:
    """A reasoner's high-level output; the executor turns it into actions.

    ``encountered`` carries the obstacle ids the policy weighed as blocking
    its committed route; the executor accumulates them for the interaction
    efficiency denominator.
    """

    kind: DecisionKind
    object_id: str | None = None
    zone_id: str | None = None
    room_id: str | None = None
    path: tuple[Cell, ...] | None = None
    reason: str = ""
    source: str = "heuristic"
    encountered: frozenset[str] = frozenset()

    def describe(self) -> str:
        if self.kind == DecisionKind.ATTEMPT_TASK:
            return "ATTEMPT"
        if self.kind == DecisionKind.MOVE_OBSTACLE:
            return f"MOVE {self.object_id} {self.zone_id}"
        if self.kind == DecisionKind.DETOUR:
            return "DETOUR"
        if self.kind == DecisionKind.EXPLORE_ROOM:
            return f"EXPLORE {self.room_id}"
        return "GIVEUP"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "object_id": self.object_id,
            "zone_id": self.zone_id,
            "room_id": self.room_id,
            "reason": self.reason,
            "source": self.source,
            "encountered": sorted(self.encountered),
        }


@dataclass(frozen=True)
class ReasonerConfig:
    effort: float = 5.0
    beta: float | None = None  # None -> belief-graph diameter estimate * step_time
    history_length: int = 3
    step_time: float = 1.0
    mode: str = "heuristic"  # or "external"
    centrality_style: str = "numeric"

    def __post_init__(self) -> None:
        if self.effort < 0 or (self.beta is not None and self.beta < 0):
            raise ValueError("effort and beta must be non-negative")
        if self.history_length < 0:
            raise ValueError("history_length must be non-negative")


class Intervention(NamedTuple):
    object_id: str
    zone_id: str
    cost: float
    score: float  # cost - beta * centrality


def _id_key(oid: str) -> tuple[str, int, str]:
    """Natural sort for ids like obs_10: prefix, numeric suffix, raw."""
    head, _, tail = oid.rpartition("_")
    if tail.isdigit():
        return (head, int(tail), oid)
    return (oid, -1, oid)


def effective_beta(scene: SceneGraph, config: ReasonerConfig) -> float:
    if config.beta is not None:
        return config.beta
    return scene.strict.diameter_estimate() * config.step_time


def removal_cost(
    scene: SceneGraph,
    obstacle_id: str,
    zone_id: str,
    effort: float,
    step_time: float = 1.0,
) -> float:
    """travel(robot -> obstacle) + 2 * effort + travel(obstacle -> zone), seconds.

    Both legs run on the strict belief graph with only the target obstacle's
    own cell made traversable; infinity when either leg is disconnected.
    """
    obstacle = scene.require(obstacle_id)
    zone = scene.zone_by_id(zone_id)
    graph = scene.strict.with_cell_free(obstacle.cell)
    leg1, _ = route_between(graph, scene.robot, obstacle.cell)
    if leg1 is None:
        return math.inf
    leg2, _ = route_between(graph, obstacle.cell, zone.cell)
    if leg2 is None:
        return math.inf
    return (leg1 + leg2) * step_time + 2.0 * effort


def select_intervention(
    scene: SceneGraph,
    candidates: Sequence[str],
    config: ReasonerConfig,
) -> Intervention | None:
    """Best finite (obstacle, zone) pair by score; None when nothing is finite.

    Ties break on (raw cost, obstacle id, zone id) so runs are replayable.
    """
    beta = effective_beta(scene, config)
    best: Intervention | None = None
    best_key: tuple | None = None
    for oid in sorted(set(candidates), key=_id_key):
        obj = scene.objects.get(oid)
        if obj is None or not obj.occupying:
            continue
        graph = scene.strict.with_cell_free(obj.cell)
        leg1, _ = route_between(graph, scene.robot, obj.cell)
        if leg1 is None:
            continue
        from_obstacle = graph.distance_field(obj.cell)
        bc = scene.centrality_at(obj.cell)
        for zone in scene.drop_zones:
            steps = (
                0 if zone.cell == obj.cell else from_obstacle.steps_to(zone.cell)
            )
            if steps is None or not graph.is_free(zone.cell):
                continue
            cost = (leg1 + steps) * config.step_time + 2.0 * config.effort
            score = cost - beta * bc
            key = (score, cost, _id_key(oid), _id_key(zone.id))
            if best_key is None or key < best_key:
                best_key = key
                best = Intervention(oid, zone.id, cost, score)
    return best


class GoalRoutes(NamedTuple):
    strict_steps: float | None  # robot -> object -> receptacle, obstacle-free
    relaxed_steps: float | None  # same through movable obstacles
    blockers: frozenset[str]


def goal_routes(scene: SceneGraph, task: TaskView) -> GoalRoutes:
    """Two-leg route summary for the current task on both belief graphs."""
    obj = scene.require(task.object_id)
    rec = scene.require(task.receptacle_id)
    leg1_strict, _ = scene.route_to(obj.cell, "strict")
    leg1_relaxed, relaxed_path1 = scene.route_to(obj.cell, "relaxed")
    blockers = set(scene.blockers_on(relaxed_path1, obj.cell))

    carry_src = scene.robot if obj.state == "carried" else obj.cell
    if obj.state != "carried" and not scene.strict.is_free(carry_src):
        # Task object resting on an occupied cell: hand the leg to the
        # relaxed/strict neighbor logic by starting at the robot instead.
        carry_src = scene.robot
    leg2_strict, _ = route_between(scene.strict, carry_src, rec.cell)
    leg2_relaxed, relaxed_path2 = route_between(scene.relaxed, carry_src, rec.cell)
    blockers |= scene.blockers_on(relaxed_path2, rec.cell)

    strict = (
        None if leg1_strict is None or leg2_strict is None else leg1_strict + leg2_strict
    )
    relaxed = (
        None
        if leg1_relaxed is None or leg2_relaxed is None
        else leg1_relaxed + leg2_relaxed
    )
    return GoalRoutes(strict, relaxed, frozenset(blockers))


def _explore_or_clear(
    scene: SceneGraph,
    categories: Sequence[str],
    config: ReasonerConfig,
    encountered: frozenset[str],
) -> Decision | None:
    """Explore the best-prior frontier room, clearing its approach if sealed.

    Rooms whose frontier is directly walkable win in prior order. When every
    candidate approach is sealed by known obstacles, the cheapest blocker on
    the relaxed route to the best room's doorway is relocated instead, so
    exploration cannot deadlock on a cluttered doorway.
    """
    from .catalog import load_priors

    frontiers = scene.frontier_rooms()
    priors = load_priors()
    scored = []
    for front in frontiers:
        score = sum(priors.room_weight(cat, front.room_type) for cat in categories)
        scored.append((-score, front.approach_time, front.room_id, front))
    scored.sort(key=lambda item: item[:3])

    why = f"searching for {','.join(categories) or 'routes'}"
    for _, _, _, front in scored:
        if math.isfinite(front.frontier_steps):
            return Decision(
                DecisionKind.EXPLORE_ROOM,
                room_id=front.room_id,
                reason=why,
                encountered=encountered,
            )
    residual = _reveal_residual_unknowns(scene, config, why, encountered)
    if residual is not None:
        return residual
    for _, _, _, front in scored:
        room = scene.floorplan.rooms_by_id[front.room_id]
        targets = set(room.cells)
        targets |= {d.cell for d in scene.floorplan.doors_of_room(front.room_id)}
        best: tuple[float, list[Cell]] | None = None
        for cell in sorted(targets & scene.unknown_cells, key=lambda c: (c[1], c[0])):
            steps, path = scene.route_to(cell, "relaxed")
            if steps is None or path is None:
                continue
            if best is None or steps < best[0]:
                best = (steps, path)
        if best is None:
            continue
        blockers = scene.blockers_on(best[1])
        if not blockers:
            continue
        choice = select_intervention(scene, sorted(blockers), config)
        if choice is not None:
            return Decision(
                DecisionKind.MOVE_OBSTACLE,
                object_id=choice.object_id,
                zone_id=choice.zone_id,
                reason=f"opening {front.room_id} while {why}",
                encountered=encountered | blockers,
            )
    return _clear_residual_unknowns(scene, config, why, encountered)


def _room_owning(scene: SceneGraph, cell: Cell) -> str | None:
    room = scene.floorplan.room_of(cell)
    if room is not None:
        return room.id
    for door in scene.floorplan.doors:
        if door.cell == cell:
            return door.room_a
    return None


def _reveal_residual_unknowns(
    scene: SceneGraph, config: ReasonerConfig, why: str, encountered: frozenset[str]
) -> Decision | None:
    """Walkable probe of leftover Unknown pockets, wherever they hide.

    Rooms count as Explored at 90% coverage, so the missing tenth can still
    hold the goal; those pockets never show up as frontier rooms.
    """
    del config
    if not scene.unknown_cells:
        return None
    probe = scene.nearest_revealing_cell()
    if probe is None:
        return None
    room_id = _room_owning(scene, probe[2])
    if room_id is None:
        return None
    return Decision(
        DecisionKind.EXPLORE_ROOM,
        room_id=room_id,
        reason=f"residual unknown cells while {why}",
        encountered=encountered,
    )


def _clear_residual_unknowns(
    scene: SceneGraph, config: ReasonerConfig, why: str, encountered: frozenset[str]
) -> Decision | None:
    """Relocate a blocker sealing the nearest leftover Unknown pocket."""
    best: tuple[float, list[Cell]] | None = None
    for cell in sorted(scene.unknown_cells, key=lambda c: (c[1], c[0])):
        steps, path = scene.route_to(cell, "relaxed")
        if steps is None or path is None:
            continue
        if best is None or steps < best[0]:
            best = (steps, path)
    if best is None:
        return None
    blockers = scene.blockers_on(best[1])
    if not blockers:
        return None
    choice = select_intervention(scene, sorted(blockers), config)
    if choice is None:
        return None
    return Decision(
        DecisionKind.MOVE_OBSTACLE,
        object_id=choice.object_id,
        zone_id=choice.zone_id,
        reason=f"unsealing unknown cells while {why}",
        encountered=encountered | blockers,
    )


def decide(
    scene: SceneGraph,
    task: TaskView,
    history: Sequence[str],
    config: ReasonerConfig,
) -> Decision:
    """Deterministic heuristic reasoner; ignores history by design."""
    del history
    missing = []
    if not scene.has_object(task.object_id):
        missing.append(task.object_category)
    if not scene.has_object(task.receptacle_id):
        missing.append(task.receptacle_category)
    if missing:
        explore = _explore_or_clear(scene, missing, config, frozenset())
        return explore or Decision(
            DecisionKind.GIVE_UP, reason="goal not discovered and no frontier rooms remain"
        )

    routes = goal_routes(scene, task)
    if routes.relaxed_steps is None:
        explore = _explore_or_clear(scene, [], config, frozenset())
        return explore or Decision(
            DecisionKind.GIVE_UP, reason="goal unreachable on the current belief"
        )

    if routes.strict_steps is not None:
        if routes.blockers:
            choice = select_intervention(scene, sorted(routes.blockers), config)
            if choice is not None:
                detour_excess = (routes.strict_steps - routes.relaxed_steps) * config.step_time
                if choice.score < detour_excess:
                    return Decision(
                        DecisionKind.MOVE_OBSTACLE,
                        object_id=choice.object_id,
                        zone_id=choice.zone_id,
                        reason="clearing beats the detour overhead",
                        encountered=routes.blockers,
                    )
        return Decision(DecisionKind.ATTEMPT_TASK, encountered=routes.blockers)

    candidates = sorted(routes.blockers) or [o.id for o in scene.occupying_obstacles()]
    choice = select_intervention(scene, candidates, config)
    if choice is not None:
        return Decision(
            DecisionKind.MOVE_OBSTACLE,
            object_id=choice.object_id,
            zone_id=choice.zone_id,
            reason="no obstacle-free route exists",
            encountered=routes.blockers,
        )
    explore = _explore_or_clear(scene, [], config, routes.blockers)
    if explore is not None:
        return explore
    return Decision(
        DecisionKind.GIVE_UP,
        reason="no feasible intervention",
        encountered=routes.blockers,
    )


# ---------------------------------------------------------------------------
# External reasoner
# ---------------------------------------------------------------------------

PROMPT_PREAMBLE = """You control a mobile robot in a cluttered multi-room building.
The robot completes placement tasks and may relocate movable obstacles to
drop zones to open routes. You receive a structured report of everything it
has discovered: the current task, per-object route costs in seconds,
blocking relations, connectivity importance (centrality), drop zones, and
unexplored rooms.

Reply with exactly one line, nothing else:
  ATTEMPT                         attempt the task along an obstacle-free route
  MOVE <obstacle_id> <zone_id>    relocate one obstacle to one drop zone
  DETOUR                          navigate toward the task object without manipulation
  EXPLORE <room_id>               explore one frontier room
  GIVEUP                          declare the task infeasible
"""


def parse_reply(text: str) -> tuple[str, list[str]] | None:
    """First line of a reply as (VERB, args); None when malformed."""
    line = text.strip().splitlines()[0].strip() if text.strip() else ""
    tokens = line.split()
    if not tokens:
        return None
    verb = tokens[0].upper()
    args = tokens[1:]
    if verb in ("ATTEMPT", "DETOUR", "GIVEUP") and not args:
        return verb, []
    if verb == "MOVE" and len(args) == 2:
        return verb, args
    if verb == "EXPLORE" and len(args) == 1:
        return verb, args
    return None


def _decision_from_reply(
    scene: SceneGraph, task: TaskView, verb: str, args: list[str], config: ReasonerConfig
) -> Decision | None:
    """Validate a parsed reply against the scene; None when not executable."""
    encountered = frozenset()
    if scene.has_object(task.object_id) and scene.has_object(task.receptacle_id):
        encountered = goal_routes(scene, task).blockers
    if verb == "GIVEUP":
        return Decision(DecisionKind.GIVE_UP, reason="external", source="external")
    if verb == "ATTEMPT":
        if not (scene.has_object(task.object_id) and scene.has_object(task.receptacle_id)):
            return None
        if goal_routes(scene, task).strict_steps is None:
            return None
        return Decision(DecisionKind.ATTEMPT_TASK, source="external", encountered=encountered)
    if verb == "DETOUR":
        if not scene.has_object(task.object_id):
            return None
        steps, path = scene.route_to(scene.objects[task.object_id].cell, "strict")
        if steps is None or path is None:
            return None
        return Decision(
            DecisionKind.DETOUR, path=tuple(path), source="external", encountered=encountered
        )
    if verb == "MOVE":
        oid, zid = args
        obj = scene.objects.get(oid)
        if obj is None or not obj.occupying:
            return None
        try:
            cost = removal_cost(scene, oid, zid, config.effort, config.step_time)
        except UnknownObjectError:
            return None
        if math.isinf(cost):
            return None
        return Decision(
            DecisionKind.MOVE_OBSTACLE,
            object_id=oid,
            zone_id=zid,
            source="external",
            encountered=encountered | {oid},
        )
    if verb == "EXPLORE":
        room_id = args[0]
        if any(front.room_id == room_id for front in scene.frontier_rooms()):
            return Decision(
                DecisionKind.EXPLORE_ROOM, room_id=room_id, source="external",
                encountered=encountered,
            )
        return None
    return None


def external_decide(
    scene: SceneGraph,
    task: TaskView,
    history: Sequence[str],
    config: ReasonerConfig,
    client: LLMClient,
) -> Decision:
    """Query the external reasoner; fall back to the heuristic on any failure.

    Transport errors are retried once. A malformed or semantically invalid
    reply falls back immediately; the fallback decision is tagged
    ``source="fallback"`` so runs can audit how often the seam degraded.
    """
    text = serialize_to_text(
        scene,
        task,
        history,
        SerializeOptions(config.history_length, config.centrality_style),
    )
    reply: str | None = None
    for _ in range(2):
        try:
            reply = client.complete(PROMPT_PREAMBLE, text)
            break
        except TransportError:
            continue
    if reply is not None:
        parsed = parse_reply(reply)
        if parsed is not None:
            decision = _decision_from_reply(scene, task, parsed[0], parsed[1], config)
            if decision is not None:
                return decision
    fallback = decide(scene, task, history, config)
    return replace(fallback, source="fallback")

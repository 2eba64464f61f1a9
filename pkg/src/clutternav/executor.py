"""Ground-truth world simulation, closed-loop episode execution, baselines.

Timestep accounting: one timestep per grid step, ceil(effort) per pick and
per place (one timestep is one second, matching the seconds-denominated
planning costs). Obstacles placed onto a drop zone are stowed: they leave
the traversability grid for good, which is what makes exhaustive-cleanup
policies end with a clutter-free graph. A place onto an occupied non-zone
cell is rejected but still charged, since the robot wasted the attempt.

Episodes end at the first failed task: a policy give-up, the step budget,
or a stall (repeated decisions that change nothing).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .dataset import Episode, ObjectKind, Task
from .grid import Cell, GridGraph
from .llm import LLMClient
from .perception import UNKNOWN, Belief, SensorConfig, TrackedObject, observe
from .planner import (
    Decision,
    DecisionKind,
    ReasonerConfig,
    decide,
    external_decide,
    goal_routes,
    _id_key,
)
from .scenegraph import SceneGraph, TaskView, route_between, update

DEFAULT_MAX_STEPS_PER_TASK = 500


class ActionKind(str, Enum):
    STEP = "step"
    PICK = "pick"
    PLACE = "place"


@dataclass(frozen=True)
class Action:
    kind: ActionKind
    to: Cell | None = None
    object_id: str | None = None
    cell: Cell | None = None

    @classmethod
    def step(cls, to: Cell) -> "Action":
        return cls(ActionKind.STEP, to=to)

    @classmethod
    def pick(cls, object_id: str) -> "Action":
        return cls(ActionKind.PICK, object_id=object_id)

    @classmethod
    def place(cls, object_id: str, cell: Cell) -> "Action":
        return cls(ActionKind.PLACE, object_id=object_id, cell=cell)

    def to_dict(self) -> dict:
        data: dict = {"kind": self.kind.value}
        if self.to is not None:
            data["to"] = list(self.to)
        if self.object_id is not None:
            data["object"] = self.object_id
        if self.cell is not None:
            data["cell"] = list(self.cell)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "Action":
        return cls(
            ActionKind(data["kind"]),
            to=tuple(data["to"]) if "to" in data else None,
            object_id=data.get("object"),
            cell=tuple(data["cell"]) if "cell" in data else None,
        )


@dataclass(frozen=True)
class Outcome:
    ok: bool
    t_before: int
    t_after: int
    error: str | None = None


def _adjacent(a: Cell, b: Cell) -> bool:
    return a == b or abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1


class World:
    """Mutable ground truth for one episode; single-threaded by design."""

    def __init__(self, episode: Episode):
        self.episode = episode
        self.graph: GridGraph = episode.ground_graph()
        self.objects: dict[str, TrackedObject] = {
            o.id: TrackedObject(o, o.cell, "placed") for o in episode.objects
        }
        self.robot: Cell = episode.start
        if not self.graph.is_free(self.robot):
            raise ValueError(f"start cell {self.robot} is not free")
        self.carried: str | None = None
        self.t = 0
        self.steps = 0
        self.picks = 0
        self.places = 0
        self.obstacle_moves = 0
        self.failed_place_charges = 0
        self.transcript: list[dict] = []
        self.zone_cells = {z.cell: z.id for z in episode.drop_zones}

    # -- action semantics -----------------------------------------------------

    def apply(self, action: Action) -> Outcome:
        t_before = self.t
        if action.kind == ActionKind.STEP:
            out = self._apply_step(action)
        elif action.kind == ActionKind.PICK:
            out = self._apply_pick(action)
        else:
            out = self._apply_place(action)
        record = {
            "type": "action",
            "t_before": t_before,
            "t_after": self.t,
            "ok": out.ok,
            "err": out.error,
            "action": action.to_dict(),
        }
        self.transcript.append(record)
        return out

    def _reject(self, t_before: int, why: str) -> Outcome:
        return Outcome(False, t_before, self.t, why)

    def _apply_step(self, action: Action) -> Outcome:
        t0 = self.t
        target = action.to
        if target is None or not _adjacent(self.robot, target) or target == self.robot:
            return self._reject(t0, "step target must be 4-adjacent")
        if not self.graph.is_free(target):
            return self._reject(t0, f"step target {target} is not free")
        self.robot = target
        self.t += 1
        self.steps += 1
        return Outcome(True, t0, self.t)

    def _apply_pick(self, action: Action) -> Outcome:
        t0 = self.t
        obj = self.objects.get(action.object_id or "")
        if obj is None:
            return self._reject(t0, f"unknown object {action.object_id}")
        if self.carried is not None:
            return self._reject(t0, "already carrying an object")
        if obj.spec.kind == ObjectKind.RECEPTACLE:
            return self._reject(t0, "receptacles are immovable")
        if obj.state != "placed":
            return self._reject(t0, f"object is {obj.state}, not placed")
        if not _adjacent(self.robot, obj.cell):
            return self._reject(t0, "pick requires adjacency")
        if obj.spec.kind == ObjectKind.OBSTACLE:
            self.graph = self.graph.with_cell_free(obj.cell)
        self.objects[obj.id] = replace(obj, state="carried")
        self.carried = obj.id
        self.t += math.ceil(obj.spec.effort)
        self.picks += 1
        return Outcome(True, t0, self.t)

    def _apply_place(self, action: Action) -> Outcome:
        t0 = self.t
        obj = self.objects.get(action.object_id or "")
        target = action.cell
        if obj is None or target is None:
            return self._reject(t0, "place needs a carried object and a cell")
        if self.carried != obj.id:
            return self._reject(t0, f"not carrying {obj.id}")
        if not _adjacent(self.robot, target):
            return self._reject(t0, "place requires adjacency")
        charge = math.ceil(obj.spec.effort)

        if target in self.zone_cells and obj.spec.kind == ObjectKind.OBSTACLE:
            self.objects[obj.id] = TrackedObject(obj.spec, target, "stowed")
            self.carried = None
            self.obstacle_moves += 1
        elif obj.spec.kind == ObjectKind.TASK_OBJECT and self._receptacle_at(target):
            self.objects[obj.id] = TrackedObject(obj.spec, target, "placed")
            self.carried = None
        elif self.graph.is_free(target) and target != self.robot:
            if obj.spec.kind == ObjectKind.OBSTACLE:
                self.graph = self.graph.with_obstacle(target, obj.id)
                self.obstacle_moves += 1
            self.objects[obj.id] = TrackedObject(obj.spec, target, "placed")
            self.carried = None
        else:
            # Physically invalid placement: the attempt still costs time.
            self.t += charge
            self.failed_place_charges += 1
            return self._reject(t0, f"cell {target} cannot take a placement")
        self.t += charge
        self.places += 1
        return Outcome(True, t0, self.t)

    def _receptacle_at(self, cell: Cell) -> TrackedObject | None:
        oid = self.graph.occupant(cell)
        obj = self.objects.get(oid or "")
        if obj is not None and obj.spec.kind == ObjectKind.RECEPTACLE:
            return obj
        return None


@dataclass(frozen=True)
class RunLimits:
    max_steps: int
    max_decisions_per_task: int = 200
    stall_limit: int = 3

    @classmethod
    def for_episode(cls, episode: Episode, per_task: int = DEFAULT_MAX_STEPS_PER_TASK) -> "RunLimits":
        return cls(max_steps=per_task * episode.horizon)


@dataclass
class EpisodeResult:
    seed: int
    n_rooms: int
    horizon: int
    tasks_completed: int
    timesteps: int
    steps: int
    picks: int
    places: int
    obstacle_moves: int
    failed_place_charges: int
    encountered: tuple[str, ...]
    final_obstacle_cells: tuple[Cell, ...]
    reason: str
    method: str = ""
    poc_final: float | None = None

    @property
    def sr_fraction(self) -> float:
        return self.tasks_completed / self.horizon if self.horizon else 0.0

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "n_rooms": self.n_rooms,
            "horizon": self.horizon,
            "tasks_completed": self.tasks_completed,
            "timesteps": self.timesteps,
            "steps": self.steps,
            "picks": self.picks,
            "places": self.places,
            "obstacle_moves": self.obstacle_moves,
            "failed_place_charges": self.failed_place_charges,
            "encountered": sorted(self.encountered),
            "final_obstacle_cells": sorted(map(list, self.final_obstacle_cells)),
            "reason": self.reason,
            "method": self.method,
            "poc_final": self.poc_final,
            "sr_fraction": self.sr_fraction,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EpisodeResult":
        return cls(
            seed=data["seed"],
            n_rooms=data["n_rooms"],
            horizon=data["horizon"],
            tasks_completed=data["tasks_completed"],
            timesteps=data["timesteps"],
            steps=data["steps"],
            picks=data["picks"],
            places=data["places"],
            obstacle_moves=data["obstacle_moves"],
            failed_place_charges=data["failed_place_charges"],
            encountered=tuple(data["encountered"]),
            final_obstacle_cells=tuple(tuple(c) for c in data["final_obstacle_cells"]),
            reason=data["reason"],
            method=data.get("method", ""),
            poc_final=data.get("poc_final"),
        )


Policy = Callable[[SceneGraph, TaskView, Sequence[str]], Decision]


class EpisodeRunner:
    """Closed loop: sense, update scene, decide, execute, repeat."""

    def __init__(
        self,
        episode: Episode,
        policy: Policy,
        mode: str = "known",
        config: ReasonerConfig | None = None,
        limits: RunLimits | None = None,
        sensor: SensorConfig | None = None,
        observation_log: list[dict] | None = None,
    ):
        if mode not in ("known", "unknown"):
            raise ValueError(f"mode must be 'known' or 'unknown', got {mode!r}")
        self.episode = episode
        self.policy = policy
        self.mode = mode
        self.config = config or ReasonerConfig()
        self.limits = limits or RunLimits.for_episode(episode)
        self.sensor = sensor or SensorConfig()
        self.observation_log = observation_log
        self.world = World(episode)
        self._belief: Belief | None = None
        if mode == "unknown":
            self._belief = Belief.initial(episode.floorplan, episode.drop_zones)
        self.encountered: set[str] = set()
        self.history: list[str] = []

    # -- belief plumbing ------------------------------------------------------

    def belief(self) -> Belief:
        if self.mode == "known":
            return Belief.full(
                self.world.graph, self.world.objects, self.episode.drop_zones, self.world.t
            )
        assert self._belief is not None
        return self._belief

    def _sense(self) -> None:
        if self.mode != "unknown":
            return
        obs = observe(
            self.world.graph,
            self.world.objects.values(),
            self.world.robot,
            self.sensor,
            self.world.t,
        )
        assert self._belief is not None
        self._belief = self._belief.integrate(obs)
        if self.observation_log is not None:
            self.observation_log.append(obs.to_record())

    def _note_own_move(self, oid: str) -> None:
        if self.mode == "unknown":
            assert self._belief is not None
            self._belief = self._belief.with_object_moved(self.world.objects[oid])

    # -- main loop --------------------------------------------------------------

    def run(self) -> EpisodeResult:
        completed = 0
        reason = "completed"
        for task in self.episode.tasks:
            view = self._task_view(task)
            status = self._run_task(view)
            if status == "task_done":
                completed += 1
                continue
            reason = status
            break
        return self._result(completed, reason)

    def _task_view(self, task: Task) -> TaskView:
        objects = self.episode.objects_by_id
        return TaskView(
            task.object_id,
            objects[task.object_id].category,
            task.receptacle_id,
            objects[task.receptacle_id].category,
        )

    def _run_task(self, view: TaskView) -> str:
        decisions = 0
        stall = 0
        while True:
            if self.world.t >= self.limits.max_steps:
                return "max_steps"
            self._sense()
            scene = update(self.belief(), self.world.robot, self.config.step_time)
            decision = self.policy(scene, view, self.history)
            self.encountered |= decision.encountered
            decisions += 1
            if decisions > self.limits.max_decisions_per_task:
                return "decision_limit"
            mark = self._progress_mark()
            status = self._execute(decision, view)
            self.history.append(f"{decision.describe()} -> {status}")
            if decision.kind == DecisionKind.GIVE_UP:
                return "give_up"
            if status == "task_done":
                return status
            if status == "max_steps":
                return status
            if self._progress_mark() == mark:
                stall += 1
                if stall >= self.limits.stall_limit:
                    return "stalled"
            else:
                stall = 0

    def _progress_mark(self) -> tuple:
        known = -1
        if self.mode == "unknown":
            assert self._belief is not None
            known = int((self._belief.cells != UNKNOWN).sum())
        return (self.world.t, self.world.robot, known)

    def _result(self, completed: int, reason: str) -> EpisodeResult:
        w = self.world
        return EpisodeResult(
            seed=self.episode.seed,
            n_rooms=self.episode.n_rooms,
            horizon=self.episode.horizon,
            tasks_completed=completed,
            timesteps=w.t,
            steps=w.steps,
            picks=w.picks,
            places=w.places,
            obstacle_moves=w.obstacle_moves,
            failed_place_charges=w.failed_place_charges,
            encountered=tuple(sorted(self.encountered)),
            final_obstacle_cells=tuple(
                sorted(c for c, _ in w.graph.occupants.items() if w.graph.state(c).name == "OBSTACLE")
            ),
            reason=reason,
        )

    # -- decision execution ------------------------------------------------------

    def _execute(self, decision: Decision, view: TaskView) -> str:
        kind = decision.kind
        if kind == DecisionKind.GIVE_UP:
            return "ok"
        if kind == DecisionKind.EXPLORE_ROOM:
            return self._explore(decision.room_id or "")
        if kind == DecisionKind.MOVE_OBSTACLE:
            return self._move_obstacle(decision.object_id or "", decision.zone_id or "")
        if kind == DecisionKind.DETOUR:
            return self._detour(view)
        return self._attempt(view)

    def _walk(self, path: Sequence[Cell]) -> str:
        for cell in path[1:]:
            if self.world.t >= self.limits.max_steps:
                return "max_steps"
            out = self.world.apply(Action.step(cell))
            if not out.ok:
                return "rejected"
            self._sense()
        return "ok"

    def _route_from_robot(self, target: Cell, graph: GridGraph) -> list[Cell] | None:
        _, path = route_between(graph, self.world.robot, target)
        return path

    def _attempt(self, view: TaskView) -> str:
        obj = self.world.objects.get(view.object_id)
        rec = self.world.objects.get(view.receptacle_id)
        if obj is None or rec is None:
            return "blocked"
        if self.world.carried != obj.id:
            strict = self.belief().strict_graph()
            believed = self.belief().objects.get(obj.id)
            if believed is None:
                return "blocked"
            path = self._route_from_robot(believed.cell, strict)
            if path is None:
                return "blocked"
            walk_to = path if strict.is_free(path[-1]) else path[:-1]
            status = self._walk(walk_to)
            if status != "ok":
                return status
            out = self.world.apply(Action.pick(obj.id))
            if not out.ok:
                return "rejected"
            self._note_own_move(obj.id)
        strict = self.belief().strict_graph()
        path = self._route_from_robot(rec.cell, strict)
        if path is None:
            return "blocked"
        status = self._walk(path[:-1] if path[-1] == rec.cell else path)
        if status != "ok":
            return status
        out = self.world.apply(Action.place(obj.id, rec.cell))
        if not out.ok:
            return "rejected"
        self._note_own_move(obj.id)
        placed = self.world.objects[obj.id]
        if placed.cell == rec.cell:
            return "task_done"
        return "ok"

    def _detour(self, view: TaskView) -> str:
        believed = self.belief().objects.get(view.object_id)
        if believed is None:
            return "blocked"
        strict = self.belief().strict_graph()
        path = self._route_from_robot(believed.cell, strict)
        if path is None:
            return "blocked"
        walk_to = path if strict.is_free(path[-1]) else path[:-1]
        return self._walk(walk_to)

    def _move_obstacle(self, oid: str, zone_id: str) -> str:
        obj = self.world.objects.get(oid)
        zone = next((z for z in self.episode.drop_zones if z.id == zone_id), None)
        if obj is None or zone is None or not obj.occupying:
            return "blocked"
        believed = self.belief().objects.get(oid)
        if believed is None:
            return "blocked"
        approach_graph = self.belief().strict_graph().with_cell_free(believed.cell)
        path = self._route_from_robot(believed.cell, approach_graph)
        if path is None:
            return "blocked"
        status = self._walk(path[:-1] if path[-1] == believed.cell else path)
        if status != "ok":
            return status
        out = self.world.apply(Action.pick(oid))
        if not out.ok:
            return "rejected"
        self._note_own_move(oid)
        strict = self.belief().strict_graph()
        path = self._route_from_robot(zone.cell, strict)
        if path is None:
            return "blocked"
        status = self._walk(path[:-1] if path[-1] == zone.cell else path)
        if status != "ok":
            return status
        out = self.world.apply(Action.place(oid, zone.cell))
        if not out.ok:
            return "rejected"
        self._note_own_move(oid)
        return "ok"

    def _explore(self, room_id: str) -> str:
        rooms = self.episode.floorplan.rooms_by_id
        room = rooms.get(room_id)
        if room is None or self.mode == "known":
            return "blocked"
        targets = set(room.cells)
        targets |= {d.cell for d in self.episode.floorplan.doors_of_room(room_id)}
        progressed = False
        for _ in range(64):
            assert self._belief is not None
            if not any(not self._belief.knows(c) for c in targets):
                break
            strict = self._belief.strict_graph()
            frontier = [
                c
                for c in strict.free_cells()
                if any(
                    not self._belief.knows(nb) and nb in targets
                    for nb in self._neighbors(c)
                )
            ]
            if not frontier:
                break
            fieldmap = strict.distance_field(self.world.robot)
            best: tuple[int, Cell] | None = None
            for cell in frontier:
                steps = fieldmap.steps_to(cell)
                if steps is None or steps == 0:
                    continue
                if best is None or (steps, cell[1], cell[0]) < (best[0], best[1][1], best[1][0]):
                    best = (steps, cell)
            if best is None:
                break
            path = fieldmap.path_to(best[1])
            assert path is not None
            status = self._walk(path)
            progressed = True
            if status != "ok":
                return status if status == "max_steps" else "blocked"
        return "ok" if progressed else "blocked"

    def _neighbors(self, cell: Cell) -> Iterable[Cell]:
        x, y = cell
        plan = self.episode.floorplan
        for nx, ny in ((x, y - 1), (x - 1, y), (x + 1, y), (x, y + 1)):
            if 0 <= nx < plan.width and 0 <= ny < plan.height:
                yield (nx, ny)


def run_episode(
    episode: Episode,
    policy: Policy,
    mode: str = "known",
    config: ReasonerConfig | None = None,
    limits: RunLimits | None = None,
    sensor: SensorConfig | None = None,
    observation_log: list[dict] | None = None,
) -> tuple[EpisodeResult, list[dict]]:
    runner = EpisodeRunner(episode, policy, mode, config, limits, sensor, observation_log)
    result = runner.run()
    return result, runner.world.transcript


# ---------------------------------------------------------------------------
# Baseline policies
# ---------------------------------------------------------------------------


def _ordered_route_blockers(scene: SceneGraph, view: TaskView) -> list[str]:
    """Blockers in path order along the relaxed route robot -> object -> receptacle."""
    obj = scene.objects.get(view.object_id)
    rec = scene.objects.get(view.receptacle_id)
    if obj is None or rec is None:
        return []
    ordered: list[str] = []
    _, path1 = scene.route_to(obj.cell, "relaxed")
    carry_src = scene.robot if obj.state == "carried" else obj.cell
    paths = [(path1, obj.cell)]
    if scene.relaxed.is_free(carry_src):
        _, path2 = route_between(scene.relaxed, carry_src, rec.cell)
        paths.append((path2, rec.cell))
    seen = set()
    for path, target in paths:
        if not path:
            continue
        for cell in path:
            if cell == target:
                continue
            oid = scene.strict.occupant(cell)
            tracked = scene.objects.get(oid or "")
            if (
                tracked is not None
                and tracked.spec.kind == ObjectKind.OBSTACLE
                and tracked.occupying
                and tracked.id not in seen
            ):
                seen.add(tracked.id)
                ordered.append(tracked.id)
    return ordered


def _nearest_zone(scene: SceneGraph, obstacle: TrackedObject) -> str | None:
    graph = scene.strict.with_cell_free(obstacle.cell)
    fieldmap = graph.distance_field(obstacle.cell)
    best: tuple[int, tuple, str] | None = None
    for zone in scene.drop_zones:
        if not graph.is_free(zone.cell):
            continue
        steps = fieldmap.steps_to(zone.cell)
        if steps is None:
            continue
        key = (steps, _id_key(zone.id), zone.id)
        if best is None or key < best:
            best = key
    return best[2] if best else None


class AlwaysDetourPolicy:
    """Never manipulates: attempt along obstacle-free routes or give up."""

    name = "always-detour"

    def __call__(self, scene: SceneGraph, view: TaskView, history: Sequence[str]) -> Decision:
        routes = goal_routes(scene, view)
        if routes.strict_steps is not None:
            return Decision(DecisionKind.ATTEMPT_TASK)
        return Decision(DecisionKind.GIVE_UP, reason="route blocked; detours only")


class AlwaysInteractPolicy:
    """Relocates the first obstacle met on the blocked route, then re-plans."""

    name = "always-interact"

    def __call__(self, scene: SceneGraph, view: TaskView, history: Sequence[str]) -> Decision:
        routes = goal_routes(scene, view)
        if routes.strict_steps is not None:
            return Decision(DecisionKind.ATTEMPT_TASK)
        for oid in _ordered_route_blockers(scene, view):
            zone = _nearest_zone(scene, scene.objects[oid])
            if zone is not None:
                return Decision(
                    DecisionKind.MOVE_OBSTACLE,
                    object_id=oid,
                    zone_id=zone,
                    encountered=frozenset([oid]),
                )
        return Decision(DecisionKind.GIVE_UP, reason="no relocatable blocker")


class CleanShortestPathPolicy:
    """Clears every movable obstacle up front, then behaves like detour-only."""

    name = "clean-sp"

    def __call__(self, scene: SceneGraph, view: TaskView, history: Sequence[str]) -> Decision:
        encountered = frozenset()
        if scene.has_object(view.object_id) and scene.has_object(view.receptacle_id):
            encountered = goal_routes(scene, view).blockers
        remaining = scene.occupying_obstacles()
        choices: list[tuple[float, tuple, str]] = []
        for obj in remaining:
            steps, _ = scene.route_to(obj.cell, "relaxed")
            if steps is not None:
                choices.append((steps, _id_key(obj.id), obj.id))
        for _, _, oid in sorted(choices):
            zone = _nearest_zone(scene, scene.objects[oid])
            if zone is not None:
                return Decision(
                    DecisionKind.MOVE_OBSTACLE,
                    object_id=oid,
                    zone_id=zone,
                    encountered=encountered,
                )
        routes = goal_routes(scene, view)
        if routes.strict_steps is not None:
            return Decision(DecisionKind.ATTEMPT_TASK, encountered=encountered)
        return Decision(DecisionKind.GIVE_UP, reason="cleanup done, route still blocked")


class HeuristicPolicy:
    name = "heuristic"

    def __init__(self, config: ReasonerConfig | None = None):
        self.config = config or ReasonerConfig()

    def __call__(self, scene: SceneGraph, view: TaskView, history: Sequence[str]) -> Decision:
        return decide(scene, view, history, self.config)


class ExternalPolicy:
    name = "external"

    def __init__(self, client: LLMClient, config: ReasonerConfig | None = None):
        self.client = client
        self.config = config or ReasonerConfig(mode="external")
        self.fallbacks = 0

    def __call__(self, scene: SceneGraph, view: TaskView, history: Sequence[str]) -> Decision:
        decision = external_decide(scene, view, history, self.config, self.client)
        if decision.source == "fallback":
            self.fallbacks += 1
        return decision


def make_policy(
    name: str, config: ReasonerConfig | None = None, client: LLMClient | None = None
) -> Policy:
    if name == "heuristic":
        return HeuristicPolicy(config)
    if name == "external":
        if client is None:
            raise ValueError("external policy needs an LLM client")
        return ExternalPolicy(client, config)
    if name == "always-detour":
        return AlwaysDetourPolicy()
    if name == "always-interact":
        return AlwaysInteractPolicy()
    if name == "clean-sp":
        return CleanShortestPathPolicy()
    raise ValueError(f"unknown policy {name!r}")


# ---------------------------------------------------------------------------
# Replay
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReplayReport:
    ok: bool
    first_divergence: int | None  # transcript index, not timestep
    detail: str
    tasks_completed: int
    final_obstacle_cells: tuple[Cell, ...]


def replay_transcript(episode: Episode, records: Sequence[dict]) -> ReplayReport:
    """Re-execute a transcript against its episode and verify every outcome."""
    world = World(episode)
    tasks = list(episode.tasks)
    task_index = 0
    for i, record in enumerate(records):
        if record.get("type") != "action":
            continue
        action = Action.from_dict(record["action"])
        out = world.apply(action)
        if out.ok != record["ok"] or world.t != record["t_after"]:
            return ReplayReport(
                False,
                i,
                f"divergence at record {i}: ok={out.ok} t={world.t}, "
                f"recorded ok={record['ok']} t={record['t_after']}",
                task_index,
                tuple(),
            )
        if (
            out.ok
            and action.kind == ActionKind.PLACE
            and task_index < len(tasks)
            and action.object_id == tasks[task_index].object_id
        ):
            rec = episode.objects_by_id[tasks[task_index].receptacle_id]
            if action.cell == rec.cell:
                task_index += 1
    final = tuple(
        sorted(c for c in world.graph.occupants if world.graph.state(c).name == "OBSTACLE")
    )
    return ReplayReport(True, None, "transcript replays cleanly", task_index, final)


def save_transcript(records: Sequence[dict], path: str | Path) -> None:
    with open(path, "w") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def load_transcript(path: str | Path) -> list[dict]:
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records

"""Procedural episodes: floorplans, centrality-weighted clutter, tasks, files.

Everything here is a pure function of its seed, so distinct episodes can be
generated in parallel and regenerating a dataset reproduces it byte for
byte. Clutter placement intentionally does not enforce task feasibility:
layouts in which some tasks are unreachable without moving obstacles are the
point of the benchmark.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .catalog import load_priors
from .grid import Cell, Door, Floorplan, GridGraph, Room, ROOM_TYPES, build_grid_graph

EPISODE_SCHEMA_VERSION = 1

DEFAULT_BASE_FRACTION = 0.10
DEFAULT_HORIZON = 20
DEFAULT_EFFORT = 5.0
DROP_ZONES_PER_ROOM = 2


class GenerationError(RuntimeError):
    """Raised when a layout cannot satisfy the generation constraints."""


class EpisodeFormatError(ValueError):
    """Raised on malformed or version-mismatched episode files."""


class ObjectKind(str, Enum):
    TASK_OBJECT = "task"
    RECEPTACLE = "receptacle"
    OBSTACLE = "obstacle"


@dataclass(frozen=True)
class ObjectSpec:
    id: str
    category: str
    kind: ObjectKind
    cell: Cell
    effort: float = DEFAULT_EFFORT


@dataclass(frozen=True)
class DropZone:
    id: str
    cell: Cell
    room_id: str


@dataclass(frozen=True)
class ClutterConfig:
    base_fraction: float = DEFAULT_BASE_FRACTION
    density: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        occluded = self.base_fraction * self.density
        if not 0.0 < occluded < 0.5:
            raise ValueError(
                f"base_fraction*density must be in (0, 0.5), got {occluded:.3f}"
            )


class Task(NamedTuple):
    object_id: str
    receptacle_id: str


@dataclass(frozen=True)
class Episode:
    """One serializable benchmark unit: layout, clutter, and ordered tasks."""

    floorplan: Floorplan
    objects: tuple[ObjectSpec, ...]
    drop_zones: tuple[DropZone, ...]
    clutter_cells: tuple[Cell, ...]
    tasks: tuple[Task, ...]
    horizon: int
    seed: int
    start: Cell

    @property
    def objects_by_id(self) -> dict[str, ObjectSpec]:
        return {o.id: o for o in self.objects}

    def of_kind(self, kind: ObjectKind) -> list[ObjectSpec]:
        return [o for o in self.objects if o.kind == kind]

    @property
    def n_rooms(self) -> int:
        return len(self.floorplan.rooms)

    def fixture_cells(self) -> dict[Cell, str]:
        return {o.cell: o.id for o in self.of_kind(ObjectKind.RECEPTACLE)}

    def obstacle_cells(self) -> dict[Cell, str]:
        return {o.cell: o.id for o in self.of_kind(ObjectKind.OBSTACLE)}

    def clutter_free_graph(self) -> GridGraph:
        """Ground truth with every movable obstacle removed (PoC reference)."""
        return build_grid_graph(self.floorplan, fixtures=self.fixture_cells())

    def ground_graph(self) -> GridGraph:
        return build_grid_graph(
            self.floorplan, obstacles=self.obstacle_cells(), fixtures=self.fixture_cells()
        )


def derive_seed(base: int, *parts: object) -> int:
    """Stable 63-bit child seed from a base seed and a label path."""
    text = ":".join([str(base), *map(str, parts)])
    digest = hashlib.blake2b(text.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


# ---------------------------------------------------------------------------
# Floorplan generation
# ---------------------------------------------------------------------------


def generate_floorplan(n_rooms: int, seed: int) -> Floorplan:
    """Connected multi-room layout on a slot grid, one doorway per tree edge.

    Rooms occupy a roughly square grid of slots with independently sampled
    interior sizes (>= 4x4 each, here 5..9 per side); doorways are carved on
    a random spanning tree of the slot adjacency, so n rooms get exactly
    n - 1 doors and the obstacle-free layout is always connected.
    """
    if not 1 <= n_rooms <= 10:
        raise ValueError(f"n_rooms must be in 1..10, got {n_rooms}")
    rng = random.Random(derive_seed(seed, "floorplan"))

    cols = int(np.ceil(np.sqrt(n_rooms)))
    rows = int(np.ceil(n_rooms / cols))
    col_widths = [rng.randint(5, 9) for _ in range(cols)]
    row_heights = [rng.randint(5, 9) for _ in range(rows)]

    # Interior origin of each slot; walls are the 1-cell seams between slots.
    x_origin = [1 + sum(col_widths[:c]) + c for c in range(cols)]
    y_origin = [1 + sum(row_heights[:r]) + r for r in range(rows)]
    width = x_origin[-1] + col_widths[-1] + 1
    height = y_origin[-1] + row_heights[-1] + 1

    slot_of_room = {i: divmod(i, cols) for i in range(n_rooms)}  # room -> (row, col)
    room_types = _assign_room_types(n_rooms, rng)
    rooms = []
    for i in range(n_rooms):
        r, c = slot_of_room[i]
        cells = frozenset(
            (x, y)
            for x in range(x_origin[c], x_origin[c] + col_widths[c])
            for y in range(y_origin[r], y_origin[r] + row_heights[r])
        )
        rooms.append(Room(id=f"r{i}", type=room_types[i], cells=cells))

    doors = _carve_doors(n_rooms, slot_of_room, cols, x_origin, y_origin, col_widths, row_heights, rng)

    interior = set().union(*(room.cells for room in rooms)) if rooms else set()
    door_cells = {d.cell for d in doors}
    walls = frozenset(
        (x, y)
        for x in range(width)
        for y in range(height)
        if (x, y) not in interior and (x, y) not in door_cells
    )
    return Floorplan(width=width, height=height, rooms=tuple(rooms), doors=tuple(doors), walls=walls)


def _assign_room_types(n_rooms: int, rng: random.Random) -> list[str]:
    # Anchor a LivingRoom (and Kitchen when possible) so category priors
    # always have somewhere sensible to point.
    types = ["LivingRoom"]
    if n_rooms >= 2:
        types.append("Kitchen")
    while len(types) < n_rooms:
        types.append(rng.choice(ROOM_TYPES))
    return types


def _carve_doors(
    n_rooms: int,
    slot_of_room: dict[int, tuple[int, int]],
    cols: int,
    x_origin: list[int],
    y_origin: list[int],
    col_widths: list[int],
    row_heights: list[int],
    rng: random.Random,
) -> list[Door]:
    room_at = {slot: room for room, slot in slot_of_room.items()}
    edges = []
    for room, (r, c) in slot_of_room.items():
        for dr, dc in ((0, 1), (1, 0)):
            other = room_at.get((r + dr, c + dc))
            if other is not None:
                edges.append((room, other))
    rng.shuffle(edges)

    parent = list(range(n_rooms))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    doors = []
    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra == rb:
            continue
        parent[ra] = rb
        (r1, c1), (r2, c2) = slot_of_room[a], slot_of_room[b]
        if r1 == r2:  # horizontal neighbors, vertical wall
            wall_x = x_origin[max(c1, c2)] - 1
            y = rng.randrange(y_origin[r1], y_origin[r1] + row_heights[r1])
            cell = (wall_x, y)
        else:  # vertical neighbors, horizontal wall
            wall_y = y_origin[max(r1, r2)] - 1
            x = rng.randrange(x_origin[c1], x_origin[c1] + col_widths[c1])
            cell = (x, wall_y)
        doors.append(Door(f"r{a}", f"r{b}", cell))
    return doors


# ---------------------------------------------------------------------------
# Clutter placement
# ---------------------------------------------------------------------------


def clutter_weights(graph: GridGraph, forbidden: Iterable[Cell] = ()) -> dict[Cell, float]:
    """Exact first-draw selection weights: bc(n) / sum bc over candidates.

    Cells with zero betweenness are never candidates, so dead ends are never
    cluttered; forbidden cells are removed before renormalizing.
    """
    banned = set(forbidden)
    bc = graph.betweenness()
    raw = {c: bc.value(c) for c in graph.free_cells() if c not in banned and bc.value(c) > 0.0}
    total = sum(raw.values())
    if total <= 0.0:
        return {}
    return {c: v / total for c, v in raw.items()}


def place_clutter(
    floorplan: Floorplan,
    config: ClutterConfig,
    forbidden: Iterable[Cell] = (),
    fixtures: dict[Cell, str] | None = None,
) -> tuple[Cell, ...]:
    """Sample K = round(base_fraction * density * |traversable|) obstacle cells.

    Weights are proportional to betweenness on the obstacle-free graph and
    cells are drawn without replacement. Raises GenerationError when fewer
    than K positive-weight candidates remain after exclusions.
    """
    graph = build_grid_graph(floorplan, fixtures=fixtures or {})
    if not graph.is_connected():
        raise GenerationError("obstacle-free floorplan must be connected")
    k = int(round(config.base_fraction * config.density * graph.n_free))
    weights = clutter_weights(graph, forbidden)
    if len(weights) < k:
        raise GenerationError(
            f"need {k} clutter cells but only {len(weights)} weighted candidates"
        )
    cells = sorted(weights)  # (x, y) order fixes the candidate indexing
    p = np.array([weights[c] for c in cells])
    rng = np.random.default_rng(derive_seed(config.seed, "clutter"))
    chosen = rng.choice(len(cells), size=k, replace=False, p=p / p.sum())
    return tuple(sorted(cells[int(i)] for i in chosen))


# ---------------------------------------------------------------------------
# Objects, drop zones, tasks
# ---------------------------------------------------------------------------


def _sample_room(rng: random.Random, floorplan: Floorplan, category: str) -> Room:
    priors = load_priors()
    weights = [priors.room_weight(category, room.type) for room in floorplan.rooms]
    return rng.choices(floorplan.rooms, weights=weights, k=1)[0]


def _pick_cell(rng: random.Random, room: Room, taken: set[Cell]) -> Cell:
    options = sorted(c for c in room.cells if c not in taken)
    if not options:
        raise GenerationError(f"room {room.id} has no free cell left")
    return rng.choice(options)


def generate_objects(
    floorplan: Floorplan, g: int, seed: int, effort: float = DEFAULT_EFFORT
) -> tuple[ObjectSpec, ...]:
    """Receptacles (one per room, min two) and g task objects, prior-placed.

    Receptacles become immovable fixtures, so candidate cells whose blocking
    would disconnect the obstacle-free graph are rejected.
    """
    rng = random.Random(derive_seed(seed, "objects"))
    priors = load_priors()
    taken: set[Cell] = set()
    objects: list[ObjectSpec] = []

    n_receptacles = max(2, len(floorplan.rooms))
    fixture_cells: dict[Cell, str] = {}
    for i in range(n_receptacles):
        category = rng.choice(priors.receptacle_categories)
        for _ in range(60):
            room = _sample_room(rng, floorplan, category)
            cell = _pick_cell(rng, room, taken)
            candidate = dict(fixture_cells)
            candidate[cell] = f"rec_{i}"
            if build_grid_graph(floorplan, fixtures=candidate).is_connected():
                break
        else:
            raise GenerationError("could not place receptacle without disconnecting")
        taken.add(cell)
        fixture_cells[cell] = f"rec_{i}"
        objects.append(ObjectSpec(f"rec_{i}", category, ObjectKind.RECEPTACLE, cell, effort))

    for i in range(g):
        category = rng.choice(priors.task_categories)
        room = _sample_room(rng, floorplan, category)
        cell = _pick_cell(rng, room, taken)
        taken.add(cell)
        objects.append(ObjectSpec(f"obj_{i}", category, ObjectKind.TASK_OBJECT, cell, effort))
    return tuple(objects)


def choose_drop_zones(
    floorplan: Floorplan,
    graph: GridGraph,
    occupied: Iterable[Cell] = (),
    per_room: int = DROP_ZONES_PER_ROOM,
) -> tuple[DropZone, ...]:
    """Per room, the lowest-betweenness interior cells become drop zones."""
    taken = set(occupied)
    bc = graph.betweenness()
    zones: list[DropZone] = []
    for room in floorplan.rooms:
        options = [c for c in sorted(room.cells) if c not in taken and graph.is_free(c)]
        options.sort(key=lambda c: (bc.value(c), c[1], c[0]))
        for cell in options[:per_room]:
            zones.append(DropZone(f"z{len(zones)}", cell, room.id))
            taken.add(cell)
    return tuple(zones)


def generate_tasks(
    floorplan: Floorplan, objects: Sequence[ObjectSpec], g: int, seed: int
) -> tuple[Task, ...]:
    """g (task object, receptacle) pairs; every task object used at most once."""
    rng = random.Random(derive_seed(seed, "tasks"))
    movables = [o for o in objects if o.kind == ObjectKind.TASK_OBJECT]
    receptacles = [o for o in objects if o.kind == ObjectKind.RECEPTACLE]
    if len(movables) < g:
        raise GenerationError(f"need {g} task objects, have {len(movables)}")
    if not receptacles:
        raise GenerationError("need at least one receptacle")
    chosen = rng.sample(movables, g)
    return tuple(Task(o.id, rng.choice(receptacles).id) for o in chosen)


def generate_episode(
    n_rooms: int,
    seed: int,
    clutter: ClutterConfig | None = None,
    horizon: int = DEFAULT_HORIZON,
    effort: float = DEFAULT_EFFORT,
) -> Episode:
    """Assemble a full episode; pure function of (n_rooms, config, seed)."""
    clutter = clutter or ClutterConfig(seed=seed)
    if clutter.seed != seed:
        clutter = ClutterConfig(clutter.base_fraction, clutter.density, seed)
    floorplan = generate_floorplan(n_rooms, seed)
    objects = generate_objects(floorplan, horizon, seed, effort)
    fixture_cells = {o.cell: o.id for o in objects if o.kind == ObjectKind.RECEPTACLE}
    graph = build_grid_graph(floorplan, fixtures=fixture_cells)

    object_cells = {o.cell for o in objects}
    zones = choose_drop_zones(floorplan, graph, occupied=object_cells)
    zone_cells = {z.cell for z in zones}

    start = _choose_start(floorplan, graph, object_cells | zone_cells)
    forbidden = object_cells | zone_cells | {start}
    clutter_cells = place_clutter(floorplan, clutter, forbidden, fixture_cells)

    rng = random.Random(derive_seed(seed, "obstacle-categories"))
    categories = load_priors().obstacles
    obstacles = tuple(
        ObjectSpec(f"obs_{i}", rng.choice(categories), ObjectKind.OBSTACLE, cell, effort)
        for i, cell in enumerate(clutter_cells)
    )
    tasks = generate_tasks(floorplan, objects, horizon, seed)
    return Episode(
        floorplan=floorplan,
        objects=objects + obstacles,
        drop_zones=zones,
        clutter_cells=clutter_cells,
        tasks=tasks,
        horizon=horizon,
        seed=seed,
        start=start,
    )


def _choose_start(floorplan: Floorplan, graph: GridGraph, blocked: set[Cell]) -> Cell:
    first_room = floorplan.rooms[0]
    for cell in sorted(first_room.cells, key=lambda c: (c[1], c[0])):
        if graph.is_free(cell) and cell not in blocked:
            return cell
    raise GenerationError("no start cell available in the first room")


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def canonical_json(data: object) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":")) + "\n"


def episode_to_dict(episode: Episode) -> dict:
    return {
        "version": EPISODE_SCHEMA_VERSION,
        "seed": episode.seed,
        "horizon": episode.horizon,
        "start": list(episode.start),
        "floorplan": episode.floorplan.to_dict(),
        "objects": [
            {
                "id": o.id,
                "category": o.category,
                "kind": o.kind.value,
                "cell": list(o.cell),
                "effort": o.effort,
            }
            for o in episode.objects
        ],
        "drop_zones": [
            {"id": z.id, "cell": list(z.cell), "room": z.room_id} for z in episode.drop_zones
        ],
        "clutter_cells": [list(c) for c in episode.clutter_cells],
        "tasks": [[t.object_id, t.receptacle_id] for t in episode.tasks],
    }


def episode_from_dict(data: dict) -> Episode:
    try:
        version = data["version"]
        if version != EPISODE_SCHEMA_VERSION:
            raise EpisodeFormatError(
                f"unsupported episode schema version {version!r}"
            )
        floorplan = Floorplan.from_dict(data["floorplan"])
        objects = tuple(
            ObjectSpec(
                o["id"], o["category"], ObjectKind(o["kind"]), tuple(o["cell"]), o["effort"]
            )
            for o in data["objects"]
        )
        zones = tuple(
            DropZone(z["id"], tuple(z["cell"]), z["room"]) for z in data["drop_zones"]
        )
        episode = Episode(
            floorplan=floorplan,
            objects=objects,
            drop_zones=zones,
            clutter_cells=tuple(tuple(c) for c in data["clutter_cells"]),
            tasks=tuple(Task(t[0], t[1]) for t in data["tasks"]),
            horizon=data["horizon"],
            seed=data["seed"],
            start=tuple(data["start"]),
        )
    except EpisodeFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise EpisodeFormatError(f"malformed episode file: {exc}") from exc
    ids = {o.id for o in episode.objects}
    for task in episode.tasks:
        if task.object_id not in ids or task.receptacle_id not in ids:
            raise EpisodeFormatError(f"task references unknown object: {task}")
    return episode


def save_episode(episode: Episode, path: str | Path) -> None:
    Path(path).write_text(canonical_json(episode_to_dict(episode)))


def load_episode(path: str | Path) -> Episode:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise EpisodeFormatError(f"not valid JSON: {exc}") from exc
    return episode_from_dict(data)

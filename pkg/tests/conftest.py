"""Shared fixtures: ASCII worlds and tiny deterministic episodes."""

from __future__ import annotations

import pytest

from clutternav.dataset import DropZone, ObjectKind, ObjectSpec
from clutternav.grid import Floorplan, GridGraph, Room


def graph_from_ascii(text: str) -> GridGraph:
    """Build a one-room graph from a map: '#' wall, '.' free, 'o' obstacle,
    'R' fixture, 'z'/'S' free markers (callers look the cells up themselves)."""
    rows = [line for line in text.strip("\n").splitlines()]
    height = len(rows)
    width = max(len(r) for r in rows)
    walls = set()
    cells = set()
    obstacles = {}
    fixtures = {}
    for y, row in enumerate(rows):
        for x in range(width):
            ch = row[x] if x < len(row) else "#"
            if ch == "#":
                walls.add((x, y))
            else:
                cells.add((x, y))
                if ch == "o":
                    obstacles[(x, y)] = f"obs_{len(obstacles)}"
                elif ch == "R":
                    fixtures[(x, y)] = f"rec_{len(fixtures)}"
    plan = Floorplan(
        width=width,
        height=height,
        rooms=(Room("r0", "LivingRoom", frozenset(cells)),),
        doors=(),
        walls=frozenset(walls),
    )
    return GridGraph.build(plan, obstacles=obstacles, fixtures=fixtures)


def find(text: str, marker: str) -> tuple[int, int]:
    rows = text.strip("\n").splitlines()
    for y, row in enumerate(rows):
        x = row.find(marker)
        if x >= 0:
            return (x, y)
    raise ValueError(f"marker {marker!r} not in map")


def open_room(width: int, height: int) -> GridGraph:
    lines = ["." * width for _ in range(height)]
    return graph_from_ascii("\n".join(lines))


@pytest.fixture
def corridor5() -> GridGraph:
    return graph_from_ascii(".." + "o" + "..")


def make_objects(graph: GridGraph, effort: float = 5.0) -> list[ObjectSpec]:
    """ObjectSpecs mirroring a graph's obstacle/fixture occupants."""
    specs = []
    for cell, oid in sorted(graph.occupants.items(), key=lambda kv: kv[1]):
        kind = ObjectKind.OBSTACLE if oid.startswith("obs") else ObjectKind.RECEPTACLE
        category = "Box" if kind == ObjectKind.OBSTACLE else "Shelf"
        specs.append(ObjectSpec(oid, category, kind, cell, effort))
    return specs

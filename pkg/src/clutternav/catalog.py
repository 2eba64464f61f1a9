"""Object categories and the category -> room-type placement priors.

The prior table is shipped as a data file so deployments can swap semantics
without code changes. Weights are relative; room types missing from a row
fall back to ``default_weight`` so sampling never zero-sums on floorplans
that lack the preferred room types.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources


@dataclass(frozen=True)
class Priors:
    task_objects: dict[str, dict[str, float]]
    receptacles: dict[str, dict[str, float]]
    obstacles: tuple[str, ...]
    default_weight: float

    def room_weight(self, category: str, room_type: str) -> float:
        row = self.task_objects.get(category) or self.receptacles.get(category)
        if row is None:
            return self.default_weight
        return row.get(room_type, self.default_weight)

    @property
    def task_categories(self) -> tuple[str, ...]:
        return tuple(sorted(self.task_objects))

    @property
    def receptacle_categories(self) -> tuple[str, ...]:
        return tuple(sorted(self.receptacles))


@lru_cache(maxsize=1)
def load_priors() -> Priors:
    with resources.files("clutternav.data").joinpath("room_priors.json").open() as fh:
        raw = json.load(fh)
    return Priors(
        task_objects=raw["task_objects"],
        receptacles=raw["receptacles"],
        obstacles=tuple(raw["obstacles"]),
        default_weight=float(raw["default_weight"]),
    )

"""Gridworld benchmark for sequential placement tasks among movable clutter."""

from .dataset import (
    ClutterConfig,
    DropZone,
    Episode,
    ObjectKind,
    ObjectSpec,
    Task,
    generate_episode,
    generate_floorplan,
    load_episode,
    save_episode,
)
from .executor import EpisodeResult, RunLimits, make_policy, replay_transcript, run_episode
from .grid import Cell, CellState, Floorplan, GridGraph, build_grid_graph
from .metrics import aggregate, interaction_efficiency, les, price_of_clutter
from .perception import Belief, SensorConfig, observe
from .planner import Decision, DecisionKind, ReasonerConfig, decide, external_decide
from .scenegraph import SceneGraph, TaskView, serialize_to_text, update
from .suite import SuiteConfig, gen_dataset, run_suite

__version__ = "0.1.0"

__all__ = [
    "Belief",
    "Cell",
    "CellState",
    "ClutterConfig",
    "Decision",
    "DecisionKind",
    "DropZone",
    "Episode",
    "EpisodeResult",
    "Floorplan",
    "GridGraph",
    "ObjectKind",
    "ObjectSpec",
    "ReasonerConfig",
    "RunLimits",
    "SceneGraph",
    "SensorConfig",
    "SuiteConfig",
    "Task",
    "TaskView",
    "aggregate",
    "build_grid_graph",
    "decide",
    "external_decide",
    "gen_dataset",
    "generate_episode",
    "generate_floorplan",
    "interaction_efficiency",
    "les",
    "load_episode",
    "make_policy",
    "observe",
    "price_of_clutter",
    "replay_transcript",
    "run_episode",
    "run_suite",
    "save_episode",
    "serialize_to_text",
    "update",
]

"""Batch harness: suite configuration, dataset generation, episode runs.

A suite is fully determined by its config: per-episode seeds derive from the
base seed, room count, and index, so reruns (at any worker count) reproduce
every output byte. Results are one JSON file per (episode, method) plus a
JSON-lines transcript, which makes runs resumable by skipping files that
already exist.
"""

from __future__ import annotations

import hashlib
import json
import multiprocessing
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from .dataset import (
    ClutterConfig,
    Episode,
    canonical_json,
    derive_seed,
    generate_episode,
    load_episode,
    save_episode,
)
from .executor import (
    EpisodeResult,
    RunLimits,
    make_policy,
    run_episode,
    save_transcript,
)
from .llm import HTTPLLMClient, MockLLMClient
from .metrics import price_of_clutter
from .perception import SensorConfig
from .planner import ReasonerConfig

MANIFEST_NAME = "manifest.json"

KNOWN_METHODS = ("heuristic", "external", "always-detour", "always-interact", "clean-sp")


@dataclass(frozen=True)
class SuiteConfig:
    rooms: tuple[int, ...] = tuple(range(1, 11))
    episodes_per_room: int = 10
    base_fraction: float = 0.10
    density: float = 1.0
    horizon: int = 20
    effort: float = 5.0
    beta: float | None = None
    history_length: int = 3
    sensor_range: int = 5
    mode: str = "known"
    methods: tuple[str, ...] = ("heuristic", "always-detour", "always-interact")
    seed: int = 0
    workers: int = 1
    max_steps_per_task: int = 500
    llm: str = "none"  # none | http | mock:<reply>|<reply>...

    def __post_init__(self) -> None:
        if not self.methods:
            raise ValueError("methods must be nonempty")
        for method in self.methods:
            if method not in KNOWN_METHODS:
                raise ValueError(f"unknown method {method!r}")
        if self.mode not in ("known", "unknown"):
            raise ValueError("mode must be 'known' or 'unknown'")
        if self.density <= 0:
            raise ValueError("density must be positive")
        ClutterConfig(self.base_fraction, self.density, 0)  # validates the product
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")

    # Only these fields shape the dataset; run-side knobs may differ between
    # generation and execution without invalidating the manifest.
    def dataset_fields(self) -> dict:
        return {
            "rooms": list(self.rooms),
            "episodes_per_room": self.episodes_per_room,
            "base_fraction": self.base_fraction,
            "density": self.density,
            "horizon": self.horizon,
            "effort": self.effort,
            "seed": self.seed,
        }

    def dataset_hash(self) -> str:
        return hashlib.sha256(canonical_json(self.dataset_fields()).encode()).hexdigest()

    def reasoner_config(self) -> ReasonerConfig:
        return ReasonerConfig(
            effort=self.effort,
            beta=self.beta,
            history_length=self.history_length,
            step_time=1.0,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SuiteConfig":
        kwargs = dict(data)
        if "rooms" in kwargs:
            kwargs["rooms"] = tuple(kwargs["rooms"])
        if "methods" in kwargs:
            kwargs["methods"] = tuple(kwargs["methods"])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "SuiteConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


def episode_filename(rooms: int, index: int, seed: int) -> str:
    return f"ep_r{rooms:02d}_i{index:02d}_s{seed}.json"


def gen_dataset(config: SuiteConfig, out_dir: str | Path) -> dict:
    """Write one episode file per (room count, index) plus the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for rooms in config.rooms:
        for index in range(config.episodes_per_room):
            seed = derive_seed(config.seed, "episode", rooms, index)
            episode = generate_episode(
                rooms,
                seed,
                ClutterConfig(config.base_fraction, config.density, seed),
                horizon=config.horizon,
                effort=config.effort,
            )
            name = episode_filename(rooms, index, seed)
            save_episode(episode, out / name)
            files.append({"file": name, "rooms": rooms, "index": index, "seed": seed})
    manifest = {
        "version": 1,
        "config": config.dataset_fields(),
        "config_hash": config.dataset_hash(),
        "files": files,
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    (out / MANIFEST_NAME).write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return manifest


def _make_client(config: SuiteConfig):
    if config.llm.startswith("mock:"):
        return MockLLMClient(tuple(config.llm[len("mock:"):].split("|")))
    if config.llm == "http":
        return HTTPLLMClient()
    return None


def run_one(
    episode: Episode, method: str, config: SuiteConfig
) -> tuple[EpisodeResult, list[dict]]:
    """Execute one (episode, method) pair and attach the final clutter price."""
    policy = make_policy(method, config.reasoner_config(), _make_client(config))
    limits = RunLimits.for_episode(episode, config.max_steps_per_task)
    result, transcript = run_episode(
        episode,
        policy,
        mode=config.mode,
        config=config.reasoner_config(),
        limits=limits,
        sensor=SensorConfig(config.sensor_range),
    )
    final_graph = episode.clutter_free_graph()
    for cell in result.final_obstacle_cells:
        final_graph = final_graph.with_obstacle(cell, "leftover")
    result.poc_final = price_of_clutter(final_graph, episode.clutter_free_graph())
    result.method = method
    return result, transcript


def result_filename(episode_file: str, method: str) -> str:
    return episode_file.replace(".json", f"__{method}.result.json")


def transcript_filename(episode_file: str, method: str) -> str:
    return episode_file.replace(".json", f"__{method}.transcript.jsonl")


def _run_job(args: tuple[str, str, str, dict]) -> str:
    episode_path, method, out_dir, config_data = args
    config = SuiteConfig.from_dict(config_data)
    episode = load_episode(episode_path)
    result, transcript = run_one(episode, method, config)
    out = Path(out_dir)
    name = Path(episode_path).name
    save_transcript(transcript, out / transcript_filename(name, method))
    (out / result_filename(name, method)).write_text(canonical_json(result.to_dict()))
    return result_filename(name, method)


def run_suite(
    config: SuiteConfig,
    dataset_dir: str | Path,
    out_dir: str | Path,
    resume: bool = True,
    allow_hash_mismatch: bool = False,
) -> list[Path]:
    """Run every configured method over every episode in the dataset.

    Episodes run in isolated workers with no shared state; completed result
    files are skipped when resuming. Per-episode failures would surface as
    missing result files rather than aborting the whole suite.
    """
    dataset = Path(dataset_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = json.loads((dataset / MANIFEST_NAME).read_text())
    if manifest["config_hash"] != config.dataset_hash() and not allow_hash_mismatch:
        raise ValueError(
            "dataset manifest hash does not match this config "
            "(pass allow_hash_mismatch to override)"
        )
    jobs = []
    for entry in manifest["files"]:
        for method in config.methods:
            target = out / result_filename(entry["file"], method)
            if resume and target.exists():
                continue
            jobs.append((str(dataset / entry["file"]), method, str(out), config.to_dict()))
    if config.workers > 1 and len(jobs) > 1:
        with multiprocessing.get_context("spawn").Pool(config.workers) as pool:
            pool.map(_run_job, jobs)
    else:
        for job in jobs:
            _run_job(job)
    return sorted(out.glob("*.result.json"))


def load_results(results_dir: str | Path) -> list[dict]:
    paths = sorted(Path(results_dir).glob("*.result.json"))
    return [json.loads(p.read_text()) for p in paths]

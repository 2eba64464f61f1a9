"""Episode and group metrics: success, timing, clutter price, efficiency.

The clutter-price ratio compares summed all-pairs shortest paths in the
current graph against the obstacle-free reference over the surviving pair
universe (ordered pairs whose endpoints stay free). Pairs that survive but
become disconnected are charged ten times the largest finite surviving
distance, so sealed regions hurt proportionally to environment scale
without sending the metric to infinity.

The long-term efficiency score normalizes SR, TS, and PoC within one method
group; two normalizer variants are implemented. They differ by a positive
group constant, so rankings always agree: the max-normalized variant is the
default report column and the min-normalized one is emitted for audit.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .grid import GridGraph, all_pairs_distances

DISCONNECTION_CAP_FACTOR = 10.0

BINS = (((1, 3), "1-3"), ((4, 6), "4-6"), ((7, 10), "7-10"))


def bin_label(n_rooms: int) -> str:
    for (lo, hi), label in BINS:
        if lo <= n_rooms <= hi:
            return label
    raise ValueError(f"room count {n_rooms} outside supported bins")


def price_of_clutter(current: GridGraph, free: GridGraph) -> float:
    """Ratio of summed pairwise distances, current over obstacle-free.

    Pair universe: ordered Free-cell pairs of the free graph whose both
    endpoints remain Free in the current graph. Returns exactly 1.0 when
    the graphs coincide.
    """
    if not free.is_connected():
        raise ValueError("reference graph must be connected")
    free_cells = free.free_cells()
    if set(current.free_cells()) - set(free_cells):
        raise ValueError("current graph has Free cells outside the reference graph")
    surviving = [c for c in free_cells if current.is_free(c)]
    if len(surviving) < 2:
        return 1.0
    d_free = all_pairs_distances(free, surviving)
    d_obs = all_pairs_distances(current, surviving)
    n = len(surviving)
    off_diag = ~np.eye(n, dtype=bool)
    free_sum = float(d_free[off_diag].sum())
    obs = d_obs[off_diag]
    finite = obs[obs >= 0]
    if finite.size == 0:
        # Fully shattered survivors: cap against the reference scale instead.
        cap = DISCONNECTION_CAP_FACTOR * float(d_free[off_diag].max())
        obs_sum = cap * obs.size
    else:
        cap = DISCONNECTION_CAP_FACTOR * float(finite.max())
        obs_sum = float(finite.sum()) + cap * int((obs < 0).sum())
    if free_sum == obs_sum:
        return 1.0
    return obs_sum / free_sum


def interaction_efficiency(obstacle_moves: int, encountered: int) -> float:
    """Relocations as a percentage of blockers met; above 100 for over-cleaners."""
    return 100.0 * obstacle_moves / max(encountered, 1)


def les(
    group: Mapping[str, tuple[float, float, float]],
    variant: str = "appendix",
) -> dict[str, float]:
    """Per-method efficiency score from (SR, TS, PoC) triples in one group.

    ``appendix`` divides each quantity by the group maximum; ``maintext``
    keeps SR/max but divides TS and PoC by the group minimum. Both reward
    success and penalize time and leftover clutter multiplicatively.
    """
    if variant not in ("appendix", "maintext"):
        raise ValueError(f"unknown variant {variant!r}")
    if not group:
        raise ValueError("empty method group")
    for method, (sr, ts, poc) in group.items():
        if ts <= 0 or poc <= 0:
            raise ValueError(f"{method}: TS and PoC must be positive")
    max_sr = max(sr for sr, _, _ in group.values())
    if max_sr <= 0:
        return {m: 0.0 for m in group}
    if variant == "appendix":
        ts_norm = max(ts for _, ts, _ in group.values())
        poc_norm = max(poc for _, _, poc in group.values())
    else:
        ts_norm = min(ts for _, ts, _ in group.values())
        poc_norm = min(poc for _, _, poc in group.values())
    out = {}
    for method, (sr, ts, poc) in group.items():
        out[method] = (sr / max_sr) / ((ts / ts_norm) * (poc / poc_norm))
    return out


@dataclass
class MethodBinStats:
    episodes: int
    sr_pct: float
    timesteps: float
    poc: float
    path_length_m: float
    ie_pct: float
    room_counts: tuple[int, ...]


@dataclass
class GroupReport:
    """Aggregated comparison: per (method, bin) means plus group-level LES."""

    bins: dict[str, dict[str, MethodBinStats]]  # bin label -> method -> stats
    les_appendix: dict[str, dict[str, float]]  # bin label -> method -> score
    les_maintext: dict[str, dict[str, float]]
    per_room: dict[int, dict[str, dict[str, float]]]  # rooms -> method -> fields
    normalizers: dict[str, dict[str, float]]
    warnings: list[str] = field(default_factory=list)


def aggregate(results: Iterable[Mapping], resolution_m: float = 0.25) -> GroupReport:
    """Group per-episode results by method and floorplan-size bin.

    Every result needs: method, n_rooms, sr_fraction, timesteps, steps,
    poc_final, obstacle_moves, encountered. LES is computed from bin-level
    mean SR/TS/PoC across the methods present in that bin.
    """
    rows = list(results)
    if not rows:
        raise ValueError("no results to aggregate")
    by_bin: dict[str, dict[str, list[Mapping]]] = defaultdict(lambda: defaultdict(list))
    by_room: dict[int, dict[str, list[Mapping]]] = defaultdict(lambda: defaultdict(list))
    warnings: list[str] = []
    horizons = {r["horizon"] for r in rows}
    if len(horizons) > 1:
        warnings.append(f"mixed horizons in one aggregation: {sorted(horizons)}")
    for r in rows:
        by_bin[bin_label(r["n_rooms"])][r["method"]].append(r)
        by_room[r["n_rooms"]][r["method"]].append(r)

    def mean(values: Sequence[float]) -> float:
        return float(np.mean(values)) if values else math.nan

    def stats(group: list[Mapping]) -> MethodBinStats:
        return MethodBinStats(
            episodes=len(group),
            sr_pct=100.0 * mean([r["sr_fraction"] for r in group]),
            timesteps=mean([r["timesteps"] for r in group]),
            poc=mean([r["poc_final"] for r in group]),
            path_length_m=mean([r["steps"] * resolution_m for r in group]),
            ie_pct=mean(
                [
                    interaction_efficiency(r["obstacle_moves"], len(r["encountered"]))
                    for r in group
                ]
            ),
            room_counts=tuple(sorted({r["n_rooms"] for r in group})),
        )

    bins: dict[str, dict[str, MethodBinStats]] = {}
    les_app: dict[str, dict[str, float]] = {}
    les_main: dict[str, dict[str, float]] = {}
    normalizers: dict[str, dict[str, float]] = {}
    for label in sorted(by_bin, key=lambda lb: lb.split("-")[0]):
        methods = {m: stats(g) for m, g in sorted(by_bin[label].items())}
        bins[label] = methods
        triples = {
            m: (s.sr_pct, s.timesteps, s.poc)
            for m, s in methods.items()
            if s.timesteps > 0 and s.poc > 0
        }
        if triples:
            les_app[label] = les(triples, "appendix")
            les_main[label] = les(triples, "maintext")
            normalizers[label] = {
                "sr_max": max(t[0] for t in triples.values()),
                "ts_max": max(t[1] for t in triples.values()),
                "ts_min": min(t[1] for t in triples.values()),
                "poc_max": max(t[2] for t in triples.values()),
                "poc_min": min(t[2] for t in triples.values()),
            }
        else:
            les_app[label] = {}
            les_main[label] = {}
            normalizers[label] = {}

    per_room: dict[int, dict[str, dict[str, float]]] = {}
    for rooms in sorted(by_room):
        methods = {m: stats(g) for m, g in sorted(by_room[rooms].items())}
        triples = {
            m: (s.sr_pct, s.timesteps, s.poc)
            for m, s in methods.items()
            if s.timesteps > 0 and s.poc > 0
        }
        scores = les(triples, "appendix") if triples else {}
        scores_main = les(triples, "maintext") if triples else {}
        per_room[rooms] = {
            m: {
                "sr_pct": s.sr_pct,
                "timesteps": s.timesteps,
                "poc": s.poc,
                "les_appendix": scores.get(m, math.nan),
                "les_maintext": scores_main.get(m, math.nan),
                "episodes": s.episodes,
            }
            for m, s in methods.items()
        }

    return GroupReport(
        bins=bins,
        les_appendix=les_app,
        les_maintext=les_main,
        per_room=per_room,
        normalizers=normalizers,
        warnings=warnings,
    )

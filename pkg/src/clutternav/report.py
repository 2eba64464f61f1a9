"""Report emission: delimited tables, JSON with normalizer metadata, figures.

All outputs are deterministic given the same aggregated inputs: rows are
sorted, floats use fixed formats, and figures are rendered headlessly with
metadata stripped so reruns produce identical bytes.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .metrics import GroupReport

REPORT_CSV = "report.csv"
REPORT_JSON = "report.json"
LES_BY_ROOMS_CSV = "les_by_rooms.csv"
FIGURES_DIR = "figures"

_METHOD_ORDER = ["always-detour", "always-interact", "clean-sp", "heuristic", "external"]


def _method_sort(method: str) -> tuple[int, str]:
    try:
        return (_METHOD_ORDER.index(method), method)
    except ValueError:
        return (len(_METHOD_ORDER), method)


def _fmt(value: float, digits: int = 4) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "nan"
    return f"{value:.{digits}f}"


def write_reports(report: GroupReport, out_dir: str | Path, figures: bool = True) -> list[Path]:
    """Write CSV/JSON tables plus rendered figures; returns the file list."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    csv_path = out / REPORT_CSV
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["method", "bin", "episodes", "sr_pct", "poc", "ts",
             "les", "les_maintext", "ie_pct", "pl_m"]
        )
        for label in sorted(report.bins, key=lambda lb: int(lb.split("-")[0])):
            for method in sorted(report.bins[label], key=_method_sort):
                s = report.bins[label][method]
                writer.writerow(
                    [
                        method,
                        label,
                        s.episodes,
                        _fmt(s.sr_pct, 2),
                        _fmt(s.poc, 4),
                        _fmt(s.timesteps, 2),
                        _fmt(report.les_appendix[label].get(method, math.nan), 4),
                        _fmt(report.les_maintext[label].get(method, math.nan), 4),
                        _fmt(s.ie_pct, 2),
                        _fmt(s.path_length_m, 2),
                    ]
                )
    written.append(csv_path)

    json_path = out / REPORT_JSON
    payload = {
        "bins": {
            label: {
                method: {
                    "episodes": s.episodes,
                    "sr_pct": s.sr_pct,
                    "poc": s.poc,
                    "ts": s.timesteps,
                    "ie_pct": s.ie_pct,
                    "pl_m": s.path_length_m,
                    "les": report.les_appendix[label].get(method),
                    "les_maintext": report.les_maintext[label].get(method),
                }
                for method, s in sorted(stats.items())
            }
            for label, stats in report.bins.items()
        },
        "normalizers": report.normalizers,
        "warnings": report.warnings,
    }
    json_path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    written.append(json_path)

    rooms_csv = out / LES_BY_ROOMS_CSV
    with open(rooms_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rooms", "method", "episodes", "sr_pct", "ts", "poc", "les", "les_maintext"])
        for rooms in sorted(report.per_room):
            for method in sorted(report.per_room[rooms], key=_method_sort):
                row = report.per_room[rooms][method]
                writer.writerow(
                    [
                        rooms,
                        method,
                        int(row["episodes"]),
                        _fmt(row["sr_pct"], 2),
                        _fmt(row["timesteps"], 2),
                        _fmt(row["poc"], 4),
                        _fmt(row["les_appendix"], 4),
                        _fmt(row["les_maintext"], 4),
                    ]
                )
    written.append(rooms_csv)

    if figures:
        written.extend(_write_figures(report, out / FIGURES_DIR))
    return written


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def _write_figures(report: GroupReport, fig_dir: Path) -> list[Path]:
    written = []

    methods = sorted(
        {m for per_method in report.per_room.values() for m in per_method}, key=_method_sort
    )
    rooms = sorted(report.per_room)
    if rooms and methods:
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for method in methods:
            xs = [r for r in rooms if method in report.per_room[r]]
            ys = [report.per_room[r][method]["les_appendix"] for r in xs]
            ax.plot(xs, ys, marker="o", label=method)
        ax.set_xlabel("rooms")
        ax.set_ylabel("long-term efficiency score")
        ax.set_title("Efficiency vs. floorplan size")
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        written.append(_save(fig, fig_dir / "les_by_rooms.png"))

    labels = sorted(report.bins, key=lambda lb: int(lb.split("-")[0]))
    bin_methods = sorted({m for label in labels for m in report.bins[label]}, key=_method_sort)
    if labels and bin_methods:
        fig, axes = plt.subplots(1, 3, figsize=(12, 4))
        for ax, metric, title in zip(
            axes, ("sr_pct", "timesteps", "poc"), ("SR (%)", "timesteps", "clutter price")
        ):
            width = 0.8 / max(len(bin_methods), 1)
            for i, method in enumerate(bin_methods):
                xs, ys = [], []
                for j, label in enumerate(labels):
                    stats = report.bins[label].get(method)
                    if stats is None:
                        continue
                    xs.append(j + i * width)
                    ys.append(getattr(stats, metric))
                ax.bar(xs, ys, width=width, label=method)
            ax.set_xticks([j + 0.4 - width / 2 for j in range(len(labels))])
            ax.set_xticklabels(labels)
            ax.set_title(title)
            ax.grid(True, axis="y", alpha=0.3)
        axes[0].legend(fontsize=8)
        fig.tight_layout()
        written.append(_save(fig, fig_dir / "metrics_by_bin.png"))
    return written


def console_table(report: GroupReport) -> str:
    """Fixed-width text table for terminal output."""
    lines = []
    header = f"{'bin':>5}  {'method':<16} {'eps':>4} {'SR%':>7} {'PoC':>8} {'TS':>10} {'LES':>8} {'IE%':>8}"
    lines.append(header)
    lines.append("-" * len(header))
    for label in sorted(report.bins, key=lambda lb: int(lb.split("-")[0])):
        for method in sorted(report.bins[label], key=_method_sort):
            s = report.bins[label][method]
            les_value = report.les_appendix[label].get(method, math.nan)
            lines.append(
                f"{label:>5}  {method:<16} {s.episodes:>4} {s.sr_pct:>7.2f} {s.poc:>8.4f}"
                f" {s.timesteps:>10.2f} {les_value:>8.4f} {s.ie_pct:>8.2f}"
            )
    for warning in report.warnings:
        lines.append(f"warning: {warning}")
    return "\n".join(lines)

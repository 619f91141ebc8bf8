"""Report generation: aggregate metric records into a table and figures.

Input is the append-only JSON-lines results file the commands write.  The
output is a tab-separated table plus matplotlib figures rendered to files
next to it: clustering bars, keyword-count sweep curves, expansion MAP
bars, and grounding ratio comparisons.
"""

from __future__ import annotations

import json
from collections import defaultdict
from pathlib import Path
from typing import Any, Iterable

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["read_records", "write_table", "render_figures", "TABLE_COLUMNS"]

TABLE_COLUMNS = [
    "record",
    "dataset",
    "model",
    "K",
    "prompted",
    "acc",
    "nmi",
    "inertia",
    "map10",
    "map30",
    "map50",
    "phrase_ratio",
    "keyword_ratio",
    "n",
    "seed",
    "config_hash",
]


def read_records(path: str | Path) -> list[dict[str, Any]]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: line {line_no} is not valid JSON: {exc}") from exc
    return records


def _cell(record: dict[str, Any], column: str) -> str:
    value = record.get(column)
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def write_table(records: Iterable[dict[str, Any]], path: str | Path) -> int:
    """Write one TSV row per record; returns the row count."""
    rows = 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(TABLE_COLUMNS) + "\n")
        for rec in records:
            fh.write("\t".join(_cell(rec, c) for c in TABLE_COLUMNS) + "\n")
            rows += 1
    return rows


def _label(rec: dict[str, Any]) -> str:
    return f"{rec.get('dataset', '?')}:{rec.get('model', '?')}"


def _cluster_bars(records: list[dict[str, Any]], out: Path) -> Path | None:
    if not records:
        return None
    labels = [f"{_label(r)} K={r.get('K')}" for r in records]
    acc = [r.get("acc", 0.0) for r in records]
    nm = [r.get("nmi", 0.0) for r in records]
    x = range(len(records))
    fig, ax = plt.subplots(figsize=(max(6, len(records) * 1.2), 4))
    ax.bar([i - 0.2 for i in x], acc, width=0.4, label="ACC")
    ax.bar([i + 0.2 for i in x], nm, width=0.4, label="NMI")
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("score")
    ax.set_title("Entity clustering")
    ax.legend()
    fig.tight_layout()
    path = out / "cluster_metrics.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _sweep_lines(records: list[dict[str, Any]], out: Path) -> Path | None:
    groups: dict[str, list[dict[str, Any]]] = defaultdict(list)
    for r in records:
        if r.get("K") is not None:
            groups[_label(r)].append(r)
    sweeps = {g: rs for g, rs in groups.items() if len({r["K"] for r in rs}) >= 2}
    if not sweeps:
        return None
    fig, ax = plt.subplots(figsize=(6, 4))
    for g, rs in sorted(sweeps.items()):
        rs = sorted(rs, key=lambda r: r["K"])
        ks = [r["K"] for r in rs]
        ax.plot(ks, [r.get("acc", 0.0) for r in rs], marker="o", label=f"{g} ACC")
        ax.plot(ks, [r.get("nmi", 0.0) for r in rs], marker="s", linestyle="--", label=f"{g} NMI")
    ax.set_xlabel("number of keywords")
    ax.set_ylabel("score")
    ax.set_title("Effect of keyword count")
    ax.legend(fontsize=7)
    fig.tight_layout()
    path = out / "sweep_k.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _expansion_bars(records: list[dict[str, Any]], out: Path) -> Path | None:
    if not records:
        return None
    labels = [f"{_label(r)} K={r.get('K')}" for r in records]
    x = range(len(records))
    fig, ax = plt.subplots(figsize=(max(6, len(records) * 1.2), 4))
    for offset, key in ((-0.25, "map10"), (0.0, "map30"), (0.25, "map50")):
        ax.bar([i + offset for i in x], [r.get(key, 0.0) for r in records], width=0.25, label=key.upper())
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("MAP")
    ax.set_title("Entity set expansion")
    ax.legend()
    fig.tight_layout()
    path = out / "expansion_map.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _grounding_bars(records: list[dict[str, Any]], out: Path) -> Path | None:
    if not records:
        return None
    labels = [r.get("dataset", "?") for r in records]
    x = range(len(records))
    fig, ax = plt.subplots(figsize=(max(5, len(records) * 1.2), 4))
    ax.bar([i - 0.2 for i in x], [r.get("phrase_ratio", 0.0) for r in records], width=0.4, label="phrases")
    ax.bar([i + 0.2 for i in x], [r.get("keyword_ratio", 0.0) for r in records], width=0.4, label="keywords")
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("grounding ratio")
    ax.set_title("Visual grounding")
    ax.legend()
    fig.tight_layout()
    path = out / "grounding_ratio.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_figures(records: list[dict[str, Any]], out_dir: str | Path) -> list[Path]:
    """Render one figure per record family present; returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    by_kind: dict[str, list[dict[str, Any]]] = defaultdict(list)
    for r in records:
        by_kind[str(r.get("record", ""))].append(r)
    written = []
    for maker, kind in (
        (_cluster_bars, "cluster"),
        (_sweep_lines, "cluster"),
        (_expansion_bars, "expansion"),
        (_grounding_bars, "grounding"),
    ):
        path = maker(by_kind.get(kind, []), out)
        if path is not None:
            written.append(path)
    return written

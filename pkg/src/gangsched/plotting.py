"""Static Gantt charts of schedule traces, one lane per processor."""

from __future__ import annotations

import itertools
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from gangsched.engine import MODE_RESERVED, MODE_SERVED, MODE_SERVER, ScheduleTrace  # noqa: E402

SERVER_COLOR = "0.75"
RESERVED_COLOR = "0.92"
MISS_COLOR = "firebrick"
LANE_HEIGHT = 0.6


def runs(column):
    """Maximal ``(value, start, end)`` runs of equal, non-None values."""
    out = []
    t = 0
    for value, group in itertools.groupby(column):
        length = len(list(group))
        if value is not None:
            out.append((value, t, t + length))
        t += length
    return out


def _colors(labels):
    cmap = plt.get_cmap("tab20")
    return {label: cmap(i % cmap.N) for i, label in enumerate(sorted(labels))}


def render_gantt(trace: ScheduleTrace, path: str | Path, *, misses=(), title: str | None = None) -> Path:
    """Write an SVG Gantt chart of ``trace``.

    Each maximal run of one job on one processor is a labelled rectangle.
    Processors held by a slack server are shaded gray behind whatever the
    server runs, idle reservations are hatched, and ``misses`` given as
    ``(label, t)`` pairs are marked in red on the time axis.
    """
    path = Path(path)
    horizon, m = trace.horizon, trace.m
    labels = {e for row in trace.slots for e in row if e is not None}
    colors = _colors(labels)

    with plt.rc_context({"svg.hashsalt": "gangsched", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(max(6.0, 0.45 * horizon + 2), 0.7 * m + 1.4))
        for j in range(m):
            y = m - j
            if trace.modes is not None:
                held = [c if c in (MODE_SERVER, MODE_SERVED, MODE_RESERVED) else None
                        for c in (row[j] for row in trace.modes)]
                holder = [trace.holders[t][j] if held[t] else None for t in range(horizon)]
                for _, start, end in runs(holder):
                    reserved = trace.modes[start][j] == MODE_RESERVED
                    ax.broken_barh([(start, end - start)], (y - LANE_HEIGHT / 2, LANE_HEIGHT),
                                   facecolors=RESERVED_COLOR if reserved else SERVER_COLOR,
                                   edgecolor="0.5", hatch="//" if reserved else None,
                                   gid=f"{'reservation' if reserved else 'server'}-p{j + 1}-{start}-{end}")
            column = [row[j] for row in trace.slots]
            if trace.occupants is not None:
                column = list(zip(column, (o[j] for o in trace.occupants)))
                column = [c if c[0] is not None else None for c in column]
            for value, start, end in runs(column):
                label = value[0] if isinstance(value, tuple) else value
                inner = trace.modes is not None and trace.modes[start][j] == MODE_SERVED
                height = LANE_HEIGHT * (0.6 if inner else 0.9)
                ax.broken_barh([(start, end - start)], (y - height / 2, height),
                               facecolors=colors[label], edgecolor="black",
                               gid=f"job-{label}-p{j + 1}-{start}-{end}")
                ax.text((start + end) / 2, y, label, ha="center", va="center", fontsize=8)
        for n, (label, t) in enumerate(misses):
            ax.plot([t], [m + 0.55], marker="v", color=MISS_COLOR, markersize=8,
                    gid=f"miss-{label}-{t}")
            ax.axvline(t, color=MISS_COLOR, linestyle="--", linewidth=0.8)
        ax.set_yticks(range(1, m + 1))
        ax.set_yticklabels([f"p{m - i}" for i in range(m)])
        ax.set_xlim(0, max(horizon, 1))
        ax.set_ylim(0.3, m + 0.8)
        ax.set_xticks(range(0, horizon + 1, max(1, horizon // 20)))
        ax.set_xlabel("time")
        ax.grid(axis="x", color="0.85", linestyle=":")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path

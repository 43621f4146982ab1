"""Chart-ready series export: delimited output plus rendered figures.

CSV is RFC-4180-style with header ``t,<field>``, UTF-8, LF endings.
JSON export is the raw array of record objects. The optional figure is
a PNG line chart rendered next to the delimited output.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from drivelab.model.records import STREAM_VEHICLE

DEFAULT_EXPORT_FIELD = {
    "motion": "accelerationZ",
    "location": "latitude",
    "heart": "heartRate",
    "vehicle": "speed",
}

_VEHICLE_UNITS = {"speed": "km/h", "rpm": "rpm"}


def extract_series(records: Iterable[dict], stream: str, field: str) -> list[tuple[float, float]]:
    """(t, value) pairs for one field of one stream's records."""
    out: list[tuple[float, float]] = []
    for rec in records:
        t = rec.get("t")
        if t is None:
            continue
        if stream == STREAM_VEHICLE:
            unit = _VEHICLE_UNITS.get(field, field)
            if rec.get("unit") == unit:
                out.append((t, float(rec["value"])))
        else:
            v = rec.get(field)
            if isinstance(v, (int, float)):
                out.append((t, float(v)))
    return out


def write_csv(series: list[tuple[float, float]], field: str, path) -> int:
    """Write ``t,<field>`` rows; returns the number of data rows."""
    lines = [f"t,{field}"]
    for t, v in series:
        lines.append(f"{t},{_fmt(v)}")
    Path(path).write_bytes(("\n".join(lines) + "\n").encode("utf-8"))
    return len(series)


def _fmt(v: float) -> str:
    return repr(int(v)) if float(v).is_integer() else repr(v)


def write_json(records: list[dict], path) -> int:
    Path(path).write_text(json.dumps(records, indent=2) + "\n")
    return len(records)


def render_figure(series: list[tuple[float, float]], field: str, stream: str, path,
                  title: Optional[str] = None) -> None:
    """Render a time-series line chart to an image file."""
    fig, ax = plt.subplots(figsize=(9, 4))
    if series:
        t0 = series[0][0]
        xs = [(t - t0) / 1000.0 for t, _ in series]
        ys = [v for _, v in series]
        ax.plot(xs, ys, lw=1.2)
    ax.set_xlabel("time since first record (s)")
    ax.set_ylabel(field)
    ax.set_title(title or f"{stream}: {field}")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)

"""CSV writers.  Floats are printed with 17 significant digits so a parse recovers them exactly."""

from __future__ import annotations

import csv
import io
import math
import os
from typing import Iterable, Sequence

from .engine import EnsembleSummary, TrajectoryRecord

TRAJECTORY_COLUMNS = ("t", "outcome", "sz_E", "sz_N", "sz_NM", "F_EN", "F_EM", "F_TE", "F_TN", "F_TM")
SUMMARY_COLUMNS = ("t", "mean_F", "std_F")
FIELD_COLUMNS = ("t", "n", "Bx_tF", "By_tF", "Bz_tF")


def fmt(value) -> str:
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    value = float(value)
    if math.isnan(value):
        return "nan"
    return format(value, ".17g")


def _write(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if path in (None, "-"):
        print(text, end="")
        return
    directory = os.path.dirname(os.fspath(path))
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def trajectory_rows(record: TrajectoryRecord):
    for k in range(record.times.size):
        yield (
            record.times[k],
            int(record.outcomes[k]),
            record.sz_E[k],
            record.sz_N[k],
            record.sz_NM[k],
            record.F_EN[k],
            record.F_EM[k],
            record.F_TE[k],
            record.F_TN[k],
            record.F_TM[k],
        )


def write_trajectory(record: TrajectoryRecord, path) -> None:
    _write(path, TRAJECTORY_COLUMNS, trajectory_rows(record))


def write_summaries(
    summaries: Sequence[EnsembleSummary], path, axes: Sequence[str] | None = None, final_only: bool = False
) -> None:
    """Long-format table: one row per (sweep point, time sample)."""
    if axes is None:
        axes = list(summaries[0].axes) if summaries else []
    rows = []
    for s in summaries:
        idx = [s.times.size - 1] if final_only else range(s.times.size)
        for k in idx:
            rows.append([s.axes[a] for a in axes] + [s.times[k], s.mean_F[k], s.std_F[k]])
    _write(path, list(axes) + list(SUMMARY_COLUMNS), rows)


def write_columns(columns: dict, path) -> None:
    names = list(columns)
    _write(path, names, zip(*(columns[n] for n in names)))


def write_fields(rows, path) -> None:
    _write(path, FIELD_COLUMNS, rows)


def emit_csv(obj, path, **kw) -> None:
    """Write a trajectory record, an ensemble summary, or a list of summaries."""
    if isinstance(obj, TrajectoryRecord):
        write_trajectory(obj, path)
    elif isinstance(obj, EnsembleSummary):
        write_summaries([obj], path, **kw)
    else:
        write_summaries(list(obj), path, **kw)

"""CSV helpers shared by the runner and the CLI.

Every file starts with a ``# manifest: <name>`` comment pointing at the run
manifest that produced it; readers skip ``#`` lines.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError
from .observables import TimeSeries


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_rows(path, header: Sequence[str], rows: Iterable[Sequence], manifest: str | None = None) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        if manifest is not None:
            fh.write(f"# manifest: {manifest}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def read_rows(path) -> tuple[list[str], list[list[str]]]:
    if not Path(path).is_file():
        raise ConfigurationError(f"cannot read {path}")
    with Path(path).open(newline="") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigurationError(f"{path} is empty") from None
        return header, [row for row in reader if row]


def write_series(path, series: TimeSeries, manifest: str | None = None) -> Path:
    """``kick,value`` rows."""
    return write_rows(path, ("kick", "value"), zip(series.kicks.tolist(), series.values), manifest)


def read_series(path, label: str = "") -> TimeSeries:
    header, rows = read_rows(path)
    if header[:2] != ["kick", "value"]:
        raise ConfigurationError(f"{path}: expected header kick,value, got {','.join(header)}")
    if not rows:
        raise ConfigurationError(f"{path} has no data rows")
    kicks = np.array([int(r[0]) for r in rows])
    values = np.array([float(r[1]) for r in rows])
    if np.any(np.diff(kicks) != 1):
        raise ConfigurationError(f"{path}: kicks are not consecutive")
    return TimeSeries(values, label or Path(path).stem, int(kicks[0]))

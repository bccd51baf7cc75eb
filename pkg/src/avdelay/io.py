"""CSV readers/writers and run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import os
import platform
import time
from pathlib import Path

import numpy as np

from .core import ObservedDataset, PotentialOutcomeTable

__all__ = [
    "OBSERVED_COLUMNS",
    "ORACLE_COLUMNS",
    "read_observed_csv",
    "read_oracle_csv",
    "write_observed_csv",
    "write_oracle_csv",
    "file_digest",
    "write_manifest",
]

OBSERVED_COLUMNS = ("unit_id", "entry_time", "w", "pi_1", "t_obs", "y_obs")
ORACLE_COLUMNS = ("unit_id", "entry_time", "w", "pi_1", "t0", "t1", "y0", "y1")


def _read_columns(path, required, optional=()) -> dict[str, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: missing header row")
        header = [h.strip() for h in header]
        missing = [c for c in required if c not in header]
        if missing:
            raise ValueError(f"{path}: missing column(s) {', '.join(missing)}")
        wanted = [c for c in (*required, *optional) if c in header]
        index = {c: header.index(c) for c in wanted}
        data = {c: [] for c in wanted}
        for rownum, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            for c, k in index.items():
                cell = row[k].strip() if k < len(row) else ""
                try:
                    data[c].append(float(cell))
                except ValueError:
                    raise ValueError(f"{path}: row {rownum}, column {c!r}: non-numeric value {cell!r}") from None
    return {c: np.asarray(v, dtype=float) for c, v in data.items()}


def read_observed_csv(path, bound: float | None = None) -> ObservedDataset:
    cols = _read_columns(path, OBSERVED_COLUMNS)
    extra = {} if bound is None else {"bound": bound}
    return ObservedDataset(**cols, **extra)


def read_oracle_csv(path, return_assignment: bool = False, bound: float | None = None):
    """Read a potential-outcome table.

    With ``return_assignment=True`` also return the ``w`` column, reordered
    to match the table's entry-sorted unit order.
    """
    cols = _read_columns(path, [c for c in ORACLE_COLUMNS if c != "w"], optional=("w",))
    w = cols.pop("w", None)
    extra = {} if bound is None else {"bound": bound}
    table = PotentialOutcomeTable(**cols, **extra)
    if not return_assignment:
        return table
    if w is None:
        raise ValueError(f"{path}: assignment column 'w' is required")
    by_id = dict(zip(cols["unit_id"].astype(np.int64).tolist(), w))
    return table, np.array([by_id[u] for u in table.unit_id.tolist()])


def _fmt(x) -> str:
    return repr(float(x))


def _write_rows(path, header, columns) -> None:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow(row)


def write_oracle_csv(path, table: PotentialOutcomeTable, assignment=None) -> None:
    ids = [str(int(u)) for u in table.unit_id]
    cols = [ids, [_fmt(x) for x in table.entry_time]]
    header = list(ORACLE_COLUMNS)
    if assignment is None:
        header.remove("w")
    else:
        cols.append([str(int(x)) for x in assignment])
    for name in ("pi_1", "t0", "t1", "y0", "y1"):
        cols.append([_fmt(x) for x in getattr(table, name)])
    _write_rows(path, header, cols)


def write_observed_csv(path, obs: ObservedDataset) -> None:
    cols = [
        [str(int(u)) for u in obs.unit_id],
        [_fmt(x) for x in obs.entry_time],
        [str(int(x)) for x in obs.w],
        [_fmt(x) for x in obs.pi_1],
        [_fmt(x) for x in obs.t_obs],
        [_fmt(x) for x in obs.y_obs],
    ]
    _write_rows(path, OBSERVED_COLUMNS, cols)


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, command: str, config: dict, seed, outputs, started: float) -> dict:
    """Record the run configuration and a SHA-256 digest of every output file."""
    from . import __version__

    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "version": __version__,
        "python": platform.python_version(),
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "wall_clock_seconds": round(time.time() - started, 3),
        "outputs": {os.path.basename(str(p)): file_digest(p) for p in outputs},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return manifest

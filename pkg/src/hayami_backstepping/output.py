"""CSV and key-value serialization of records and reports."""

from __future__ import annotations

import datetime as _dt
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .params import EffectiveParams, Grid
from .simulator import SimulationRecord


def fmt(value) -> str:
    """17 significant digits, enough to round-trip a double."""
    return f"{float(value):.17g}"


def _write_rows(path: Path, header: Sequence[str], rows: np.ndarray) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def write_table(path: str | Path, header: Sequence[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    _write_rows(path, header, np.atleast_2d(np.asarray(rows, dtype=float)))
    return path


def write_record(record: SimulationRecord, out_dir: str | Path) -> tuple[Path, Path]:
    """snapshots.csv (t, X, z_weir, U, u_0..u_N) and flow_q.csv (t, q at physical nodes)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n = record.grid.N + 1
    header = ["t", "X", "z_weir", "U"] + [f"u_{i}" for i in range(n)]
    data = np.column_stack([record.t, record.X, record.z_weir, record.U, record.u])
    snap = out / "snapshots.csv"
    _write_rows(snap, header, data)
    qpath = out / "flow_q.csv"
    _write_rows(qpath, ["t"] + [f"q_{j}" for j in range(n)], np.column_stack([record.t, record.q]))
    return snap, qpath


def read_record(path: str | Path, ep: EffectiveParams, grid: Grid, metadata: dict | None = None
                ) -> SimulationRecord:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
    if header[:4] != ["t", "X", "z_weir", "U"]:
        raise ValueError(f"{path} is not a snapshots file")
    n = len(header) - 4
    if n != grid.N + 1:
        raise ValueError(f"{path} has {n} nodes but the configured grid has {grid.N + 1}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return SimulationRecord(
        t=data[:, 0], X=data[:, 1], U=data[:, 3], u=data[:, 4:], ep=ep, grid=grid,
        metadata=dict(metadata or {}),
    )


def format_value(value) -> str:
    """Lowercase booleans, 17 significant digits for floats."""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return fmt(value)
    return str(value)


def write_keyvalues(path: str | Path, items: Iterable[tuple[str, object]], timestamp: bool = False
                    ) -> Path:
    """``key: value`` text; with ``timestamp`` the first line is a dated comment."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    if timestamp:
        lines.append(f"# generated: {_dt.datetime.now(_dt.timezone.utc).isoformat()}")
    for key, value in items:
        lines.append(f"{key}: {format_value(value)}")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_keyvalues(path: str | Path) -> dict[str, str]:
    out: dict[str, str] = {}
    for line in Path(path).read_text().splitlines():
        if not line or line.startswith("#") or ": " not in line:
            continue
        key, _, value = line.partition(": ")
        out.setdefault(key, value)
    return out

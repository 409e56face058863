"""CSV/JSON writers and the run manifest."""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

FLOAT_FMT = "%.17g"


def _atomic_write(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def format_float(x: float) -> str:
    return FLOAT_FMT % x


def write_csv(path, columns, rows) -> Path:
    """Write a numeric table with 17 significant digits (round-trips float64)."""
    rows = np.asarray(rows, dtype=float) + 0.0  # drops negative zeros
    if rows.ndim != 2 or rows.shape[1] != len(columns):
        raise ValueError(f"expected {len(columns)} columns, got shape {rows.shape}")
    lines = [",".join(columns)]
    lines += [",".join(format_float(x) for x in row) for row in rows]
    return _atomic_write(path, "\n".join(lines) + "\n")


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def write_json(path, obj) -> Path:
    return _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def build_manifest(command: str, config: dict, files, c0=None, beta=None,
                   wall_time=None, version: str = "") -> dict:
    return {
        "tool": "kcyamabe",
        "version": version,
        "command": command,
        "config": config,
        "c0": c0,
        "beta": beta,
        "wall_time_s": wall_time,
        "files": {Path(f).name: sha256_file(f) for f in files},
    }

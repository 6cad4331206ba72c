"""Deterministic CSV/JSON writers and the run manifest.

Numeric CSV cells are formatted with 17 significant digits so values
round-trip exactly; files are written atomically (temp file + rename) and the
manifest is written last, making its presence the completion marker for a run
directory.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from pathlib import Path

from . import __version__


def format_number(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: Path, header: list, rows: list) -> Path:
    import io

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(cell) for cell in row])
    _atomic_write(path, buffer.getvalue())
    return path


def write_json(path: Path, payload) -> Path:
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def write_config_echo(path: Path, resolved: dict) -> Path:
    lines = [f"{key} = {format_number(value)}" for key, value in sorted(resolved.items())]
    _atomic_write(path, "\n".join(lines) + "\n")
    return path


def write_manifest(path: Path, resolved_config: dict, outputs: list,
                   checks: dict, wall_time_s: float) -> Path:
    payload = {
        "config": {k: resolved_config[k] for k in sorted(resolved_config)},
        "version": __version__,
        "wall_time_s": wall_time_s,
        "outputs": sorted(str(p) for p in outputs),
        "checks": checks,
    }
    return write_json(path, payload)

from __future__ import annotations

import csv
from pathlib import Path

import torch


def write_csv(path: Path, rows: torch.Tensor, columns: list[str], metadata: dict | None = None) -> None:
    """One row per sample, preceded by ``# key=value`` metadata lines. Floats are written with ``repr``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        for key, value in (metadata or {}).items():
            f.write(f"# {key}={value}\n")
        writer = csv.writer(f)
        writer.writerow(columns)
        for row in rows.tolist():
            writer.writerow([repr(value) for value in row])


def coordinate_columns(dim: int) -> list[str]:
    return [f"x{i}" for i in range(dim)]

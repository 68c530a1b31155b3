from __future__ import annotations

import csv
import logging
from collections import defaultdict
from pathlib import Path
from typing import Sequence

import numpy as np
from pydantic import BaseModel

from boltzbit.schema.experiments import ResultRow

logger = logging.getLogger(__name__)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_table(path: Path, rows: Sequence[BaseModel] | Sequence[dict], metadata: dict | None = None) -> None:
    """CSV with ``# key=value`` header lines; floats use ``repr`` so values survive a round trip exactly."""
    records = [row.model_dump() if isinstance(row, BaseModel) else row for row in rows]
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        for key, value in (metadata or {}).items():
            f.write(f"# {key}={value}\n")
        if not records:
            return
        writer = csv.DictWriter(f, fieldnames=list(records[0]))
        writer.writeheader()
        for record in records:
            writer.writerow({key: _cell(value) for key, value in record.items()})
    logger.info(f"Wrote table, path={path}, rows={len(records)}")


def ess_quartiles(rows: Sequence[ResultRow]) -> dict[str, list[tuple[int, float, float, float]]]:
    """(nfe, q1, mean, q3) of the ESS percentage over seeds, per pipeline and sorted by NFE."""
    grouped: dict[str, dict[int, list[float]]] = defaultdict(lambda: defaultdict(list))
    for row in rows:
        grouped[row.pipeline][row.nfe].append(row.ess_percent)
    curves = {}
    for pipeline, by_nfe in grouped.items():
        curves[pipeline] = [
            (nfe, float(np.percentile(values, 25)), float(np.mean(values)), float(np.percentile(values, 75)))
            for nfe, values in sorted(by_nfe.items())
        ]
    return curves


def summarize_estimates(rows: Sequence[ResultRow]) -> list[dict]:
    """Mean and standard deviation over seeds of every (pipeline, NFE, φ) estimate."""
    grouped: dict[tuple, list[ResultRow]] = defaultdict(list)
    for row in rows:
        if row.estimate is not None:
            grouped[(row.pipeline, row.nfe, row.phi)].append(row)
    summary = []
    for (pipeline, nfe, phi), group in grouped.items():
        estimates = np.array([row.estimate for row in group])
        summary.append(
            {
                "pipeline": pipeline,
                "nfe": nfe,
                "phi": phi,
                "mean": float(estimates.mean()),
                "std": float(estimates.std(ddof=1)) if len(group) > 1 else 0.0,
                "mean_std_error": float(np.mean([row.std_error for row in group])),
                "mean_ess_percent": float(np.mean([row.ess_percent for row in group])),
                "seeds": len(group),
            }
        )
    return summary

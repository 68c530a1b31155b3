from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

GridMode = Literal["variance_matched", "free"]
TargetDesign = Literal["alternating", "sde_only"]


class TuneConfig(BaseModel):
    steps: int = Field(default=500, ge=0)
    paths: int = Field(default=256, ge=1)
    learning_rate: float = Field(default=0.05, gt=0)
    log_every: int = Field(default=50, ge=1)
    seed: int = 0


class GridDocument(BaseModel):
    """Serialized tuned grid. ``grid_hash`` addresses the mapped times."""

    n_steps: int
    eps: float
    t_max: float
    mode: GridMode
    design: TargetDesign
    raw_mu: list[float]
    raw_eta: list[float]
    raw_gamma: list[float] | None = None
    t: list[float]
    t_tar: list[float]
    t_prop: list[float]
    objective_trace: list[float] = []
    grid_hash: str

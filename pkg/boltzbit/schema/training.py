from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field


class DsmConfig(BaseModel):
    batch_size: int = Field(default=256, ge=1)
    iterations: int = Field(default=20_000, ge=0)
    learning_rate: float = Field(default=1e-3, gt=0)
    ema_rate: float = Field(default=0.999, ge=0, lt=1)
    p_mean: float = -1.2
    p_std: float = Field(default=1.2, gt=0)
    grad_clip: float | None = Field(default=1.0, gt=0)
    eval_every: int = Field(default=500, ge=1)
    eval_size: int = Field(default=4096, ge=1)
    log_every: int = Field(default=500, ge=1)
    seed: int = 0


class DistillConfig(BaseModel):
    batch_size: int = Field(default=256, ge=1)
    iterations: int = Field(default=20_000, ge=0)
    learning_rate: float = Field(default=1e-4, gt=0)
    ema_rate: float = Field(default=0.999, ge=0, lt=1)
    lambda_ctm: float = Field(default=1.0, ge=0)
    lambda_dsm: float = Field(default=1.0, ge=0)
    p_mean: float = -1.2
    p_std: float = Field(default=1.2, gt=0)
    forward_solver_steps: int = Field(default=4, ge=1)
    distance: Literal["l2sq"] = "l2sq"
    grad_clip: float | None = Field(default=1.0, gt=0)
    log_every: int = Field(default=500, ge=1)
    seed: int = 0

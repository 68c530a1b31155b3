from __future__ import annotations

from pathlib import Path
from typing import Literal

from pydantic import BaseModel, Field, field_validator

from boltzbit.settings import config

from .targets import TargetField
from .tuning import GridMode, TargetDesign, TuneConfig

Pipeline = Literal["ddpm_is", "bctm_is", "mc_only"]

DEFAULT_NFE = [2, 4, 6, 8, 12, 16, 24, 50, 100]


class ExperimentConfig(BaseModel):
    name: str = "experiment"
    target: TargetField = Field(default="gmm40-2d", validate_default=True)
    denoiser: Path | None = None  # checkpoint used by ddpm_is and mc_only
    trajectory: Path | None = None  # checkpoint used by bctm_is
    reservoir: Path | None = None  # reference bank for targets without an exact sampler
    pipelines: list[Pipeline] = Field(default=["ddpm_is", "bctm_is"], min_length=1)
    nfe: list[int] = Field(default=DEFAULT_NFE, min_length=1)
    eta: float = Field(default=1.0, ge=0, le=1)
    schedule: Literal["log", "rho"] = "log"
    rho: float = Field(default=7.0, gt=0)
    mode: GridMode = "variance_matched"
    design: TargetDesign = "alternating"
    grid_file: Path | None = None  # may contain {n_steps}
    tune: TuneConfig | None = None
    tune_bank_size: int = Field(default=100_000, ge=1)
    samples: int = Field(default=10_000, ge=1)
    shard_size: int = Field(default=10_000, ge=1)
    seeds: list[int] = Field(default=[0, 1, 2, 3, 4], min_length=1)
    phis: list[str] = ["log_l2_norm"]
    oracle_samples: int = Field(default=1_000_000, ge=1)
    alignment_steps: list[int] = [3]
    output_dir: Path = config.output_dir

    @field_validator("nfe", "alignment_steps")
    @classmethod
    def _positive(cls, value):
        if any(n < 1 for n in value):
            raise ValueError("budgets must be positive")
        return value


class ResultRow(BaseModel):
    pipeline: Pipeline | Literal["oracle"]
    nfe: int
    phi: str | None = None
    estimate: float | None = None
    std_error: float | None = None
    ess_percent: float = Field(gt=0, le=100)
    seed: int
    wall_clock: float


class AlignmentRow(BaseModel):
    design: TargetDesign
    n_steps: int
    seed: int
    wasserstein: float = Field(ge=0)  # summed over the marginals at t_0…t_{N−1} and coordinates
    wall_clock: float

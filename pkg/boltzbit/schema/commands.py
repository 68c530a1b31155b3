from __future__ import annotations

from pathlib import Path
from typing import Literal

from pydantic import BaseModel, Field

from .experiments import Pipeline
from .models import ArchitectureSpec
from .targets import TargetField
from .training import DistillConfig, DsmConfig
from .tuning import GridMode, TargetDesign, TuneConfig


class TrainDmDocument(BaseModel):
    target: TargetField = Field(default="gmm40-2d", validate_default=True)
    architecture: ArchitectureSpec | None = None  # dim and particle layout default to the target's
    train: DsmConfig = DsmConfig()
    data_size: int = Field(default=100_000, ge=1)
    sigma_data: float | None = Field(default=None, gt=0)  # estimated from the data when unset
    reservoir: Path | None = None
    output: Path = Path("denoiser.pt")


class DistillDocument(BaseModel):
    target: TargetField = Field(default="gmm40-2d", validate_default=True)
    teacher: Path
    architecture: ArchitectureSpec | None = None  # the teacher's when unset
    distill: DistillConfig = DistillConfig()
    data_size: int = Field(default=100_000, ge=1)
    reservoir: Path | None = None
    output: Path = Path("trajectory.pt")


class TuneDocument(BaseModel):
    target: TargetField = Field(default="gmm40-2d", validate_default=True)
    trajectory: Path | None = None  # analytic flow for Gaussian targets when unset
    n_steps: int = Field(default=6, ge=1)
    mode: GridMode = "variance_matched"
    design: TargetDesign = "alternating"
    tune: TuneConfig = TuneConfig()
    bank_size: int = Field(default=100_000, ge=1)
    reservoir: Path | None = None
    output: Path = Path("grid.json")


class SampleDocument(BaseModel):
    target: TargetField = Field(default="gmm40-2d", validate_default=True)
    sampler: Pipeline | Literal["cm_multistep"] = "bctm_is"
    checkpoint: Path | None = None
    nfe: int = Field(default=12, ge=1)
    eta: float = Field(default=1.0, ge=0, le=1)
    schedule: Literal["log", "rho"] = "log"
    rho: float = Field(default=7.0, gt=0)
    mode: GridMode = "variance_matched"
    design: TargetDesign = "alternating"
    grid_file: Path | None = None
    samples: int = Field(default=10_000, ge=1)
    seed: int = 0
    output: Path = Path("samples.csv")


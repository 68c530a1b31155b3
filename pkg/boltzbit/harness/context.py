from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import cast

import torch

from boltzbit.errors import ConfigError
from boltzbit.is_engine import TimeGrid
from boltzbit.models import AnalyticGmmDenoiser, GaussianFlow, load_checkpoint
from boltzbit.numerics import RandomStream
from boltzbit.schedule_opt import ScheduleParams, build_time_grid, load_grid, tune_grid
from boltzbit.schema.targets import Dw4Spec
from boltzbit.schema.tuning import GridMode, TargetDesign, TuneConfig
from boltzbit.targets import (
    Dw4Target,
    GmmTarget,
    Target,
    load_reservoir,
    make_target,
    mcmc_reference,
    sample_target,
    save_reservoir,
)
from boltzbit.training import SolverFlow

logger = logging.getLogger(__name__)

# stream ids shared by every command; shards and chains derive theirs as (base << 16) + index
RESERVOIR_STREAM = 7
TUNE_BANK_STREAM = 8


def resolve_reservoir(spec, path: Path | None, seed: int = 0) -> torch.Tensor | None:
    """Reference samples for targets without an exact sampler.

    A DW-4 reservoir is loaded from ``path`` when it exists, and otherwise drawn by MCMC and saved there.
    """
    if not isinstance(spec, Dw4Spec):
        return None if path is None else load_reservoir(path).samples
    target = cast(Dw4Target, make_target(spec))
    if path is not None and path.exists():
        return load_reservoir(path, target).samples
    logger.warning(f"No MCMC reservoir on disk, drawing {spec.reservoir_size} configurations, path={path}")
    result = mcmc_reference(target, spec.reservoir_size, spec.mcmc, RandomStream(seed, RESERVOIR_STREAM))
    if path is not None:
        save_reservoir(path, result, target, seed)
    return result.samples


def analytic_denoiser(target: Target):
    return AnalyticGmmDenoiser(target) if isinstance(target, GmmTarget) else None


def analytic_flow(target: Target):
    """Exact flow for a single Gaussian; a Heun solve of the exact noised score for other mixtures."""
    if not isinstance(target, GmmTarget):
        return None
    if len(target.weights) == 1:
        return GaussianFlow(target.means[0], target.component_variance)
    return SolverFlow(target.analytic_noised_score, target.space)


def load_model(path: Path | None, kind: str, target: Target):
    """Checkpointed network, or the closed-form model when no checkpoint is configured and one exists."""
    if path is None:
        model = analytic_denoiser(target) if kind == "denoiser" else analytic_flow(target)
        if model is None:
            raise ConfigError(f"A {kind} checkpoint is required for this target")
        logger.info(f"Using the closed-form {kind}, model={type(model).__name__}")
        return model
    checkpoint = load_checkpoint(path, kind)  # type: ignore[arg-type]
    if checkpoint.architecture.dim != target.dim:
        raise ConfigError(f"Checkpoint dim {checkpoint.architecture.dim} does not match target dim {target.dim}")
    return checkpoint.model.requires_grad_(False)


@dataclass
class RunContext:
    """Target, reference samples and models shared by the experiment recipes."""

    target: Target
    reservoir: torch.Tensor | None = None
    denoiser: object | None = None
    trajectory: object | None = None
    grids: dict[tuple[int, str], TimeGrid] = field(default_factory=dict)

    def target_bank(self, n: int, seed: int) -> torch.Tensor:
        return sample_target(self.target, n, RandomStream(seed, TUNE_BANK_STREAM), self.reservoir)

    def grid(
        self,
        n_steps: int,
        mode: GridMode,
        design: TargetDesign,
        grid_file: Path | None = None,
        tune: TuneConfig | None = None,
        bank_size: int = 100_000,
    ) -> TimeGrid:
        """A tuned grid from file, a grid tuned now, or the untuned grid, in that order of preference."""
        key = (n_steps, design)
        if key in self.grids:
            return self.grids[key]
        model = self.trajectory
        if model is None:
            raise ConfigError("Alternating grids need a trajectory model")
        if grid_file is not None:
            _, grid = load_grid(Path(str(grid_file).format(n_steps=n_steps)))
            if grid.n_steps != n_steps:
                raise ConfigError(f"Grid file holds N={grid.n_steps}, expected N={n_steps}")
        else:
            params = ScheduleParams.uniform(n_steps, mode, design)
            if tune is not None:
                params = tune_grid(params, model, self.target, self.target_bank(bank_size, tune.seed), tune)
            grid = build_time_grid(params, model.eps, model.t_max).detach()  # type: ignore[attr-defined]
        self.grids[key] = grid
        return grid

from __future__ import annotations

import logging
import math
import time
from pathlib import Path
from typing import Sequence

import torch
from scipy.stats import wasserstein_distance

from boltzbit.errors import ConfigError
from boltzbit.is_engine import (
    WeightedEnsemble,
    baseline_ddpm_is,
    bctm_is,
    ess,
    merge_ensembles,
    proposal_rollout,
    snis_estimate,
    target_rollout,
)
from boltzbit.numerics import RandomStream
from boltzbit.sampling import Schedule, ancestral_sample, coordinate_columns, log_schedule, rho_schedule, write_csv
from boltzbit.schema.experiments import AlignmentRow, ExperimentConfig, Pipeline, ResultRow
from boltzbit.schema.tuning import TargetDesign
from boltzbit.targets import TestFunction, eval_test_function, make_target, sample_target

from . import plots
from .context import RunContext, load_model, resolve_reservoir
from .tables import ess_quartiles, summarize_estimates, write_table

logger = logging.getLogger(__name__)

STREAMS: dict[str, int] = {"ddpm_is": 1, "bctm_is": 2, "mc_only": 3, "oracle": 4, "proposal": 5, "target": 6}


def stream(seed: int, name: str, shard: int = 0) -> RandomStream:
    return RandomStream(seed, (STREAMS[name] << 16) + shard)


def run_directory(experiment: ExperimentConfig) -> Path:
    return experiment.output_dir / experiment.name


def load_context(experiment: ExperimentConfig, need_denoiser: bool | None = None, need_trajectory: bool | None = None):
    """Resolve the target, its reference bank and the models the configured pipelines use."""
    if need_denoiser is None:
        need_denoiser = any(p in ("ddpm_is", "mc_only") for p in experiment.pipelines)
    if need_trajectory is None:
        need_trajectory = "bctm_is" in experiment.pipelines
    target = make_target(experiment.target)  # type: ignore[arg-type]
    context = RunContext(target, resolve_reservoir(experiment.target, experiment.reservoir))
    if need_denoiser:
        context.denoiser = load_model(experiment.denoiser, "denoiser", target)
    if need_trajectory:
        context.trajectory = load_model(experiment.trajectory, "trajectory", target)
    return context


def bctm_steps(nfe: int, design: TargetDesign) -> int:
    """Grid size N for a per-sample budget: 2N evaluations for the alternating design, N for sde_only."""
    if design == "sde_only":
        return nfe
    if nfe % 2:
        raise ConfigError(f"BCTM budgets count a proposal and a target hop per step, odd NFE={nfe}")
    return nfe // 2


def _schedule(experiment: ExperimentConfig, model, n_steps: int) -> Schedule:
    if experiment.schedule == "rho":
        return rho_schedule(n_steps, model.eps, model.t_max, experiment.rho)
    return log_schedule(n_steps, model.eps, model.t_max)


def _shards(n: int, size: int) -> list[int]:
    return [min(size, n - start) for start in range(0, n, size)]


def draw_ensemble(
    pipeline: Pipeline, nfe: int, seed: int, context: RunContext, experiment: ExperimentConfig
) -> WeightedEnsemble:
    """K samples from one pipeline at one budget, drawn in shards with distinct stream ids and merged."""
    shards = []
    for index, k in enumerate(_shards(experiment.samples, experiment.shard_size)):
        rng = stream(seed, pipeline, index)
        with torch.no_grad():
            match pipeline:
                case "ddpm_is":
                    schedule = _schedule(experiment, context.denoiser, nfe)
                    shards.append(baseline_ddpm_is(context.denoiser, context.target, schedule, experiment.eta, k, rng))
                case "bctm_is":
                    grid = context.grid(
                        bctm_steps(nfe, experiment.design),
                        experiment.mode,
                        experiment.design,
                        experiment.grid_file,
                        experiment.tune,
                        experiment.tune_bank_size,
                    )
                    shards.append(bctm_is(context.trajectory, context.target, grid, k, rng))
                case "mc_only":
                    schedule = _schedule(experiment, context.denoiser, nfe)
                    batch = ancestral_sample(context.denoiser, schedule, experiment.eta, k, rng)
                    weights = torch.zeros(k, dtype=batch.samples.dtype)
                    metadata = {**batch.metadata, "pipeline": "mc_only", "nfe": batch.nfe}
                    shards.append(WeightedEnsemble(batch.samples, weights, metadata=metadata))
    return merge_ensembles(shards)


def run_ess_curve(
    experiment: ExperimentConfig, nfe_list: Sequence[int] | None = None, context: RunContext | None = None
) -> list[ResultRow]:
    """ESS percentage per pipeline, budget and seed; writes ``ess_curve.csv`` and ``ess_curve.svg``.

    Unweighted pipelines have no ESS and are skipped.
    """
    nfe_list = list(nfe_list or experiment.nfe)
    pipelines = [p for p in experiment.pipelines if p != "mc_only"]
    if "bctm_is" in pipelines:
        for nfe in nfe_list:
            bctm_steps(nfe, experiment.design)
    context = context or load_context(experiment)

    rows = []
    for pipeline in pipelines:
        for nfe in nfe_list:
            for seed in experiment.seeds:
                start = time.perf_counter()
                ensemble = draw_ensemble(pipeline, nfe, seed, context, experiment)
                value = ess(ensemble)
                rows.append(
                    ResultRow(
                        pipeline=pipeline,
                        nfe=nfe,
                        ess_percent=100.0 * value / len(ensemble),
                        seed=seed,
                        wall_clock=time.perf_counter() - start,
                    )
                )
                logger.info(f"ESS, pipeline={pipeline}, nfe={nfe}, seed={seed}, ess={rows[-1].ess_percent:.2f}%")

    directory = run_directory(experiment)
    write_table(directory / "ess_curve.csv", rows, {"samples": experiment.samples})
    plots.ess_curve_svg(directory / "ess_curve.svg", ess_quartiles(rows), title=experiment.name)
    return rows


def _plain_estimate(values: torch.Tensor) -> tuple[float, float]:
    return values.mean().item(), (values.std() / math.sqrt(len(values))).item() if len(values) > 1 else 0.0


def oracle_samples(context: RunContext, experiment: ExperimentConfig, seed: int) -> torch.Tensor:
    """Exact samples, or one strided shard of the reference bank per seed when the target has no exact sampler."""
    if context.reservoir is not None:
        shards = len(experiment.seeds)
        if len(context.reservoir) < shards:
            raise ConfigError(f"Reservoir smaller than the seed count, size={len(context.reservoir)}, seeds={shards}")
        return context.reservoir[experiment.seeds.index(seed) :: shards]
    return sample_target(context.target, experiment.oracle_samples, stream(seed, "oracle"))


def run_integral_table(
    experiment: ExperimentConfig, phis: Sequence[str] | None = None, context: RunContext | None = None
) -> list[ResultRow]:
    """Oracle, unweighted and importance-weighted estimates of E[φ] per seed.

    Writes ``integral_table.csv`` and the mean ± std over seeds to ``integral_summary.csv``.
    """
    try:
        functions = [TestFunction(phi) for phi in (phis or experiment.phis)]
    except ValueError as e:
        raise ConfigError(f"Unknown test function, {e}") from e
    if "bctm_is" in experiment.pipelines:
        for nfe in experiment.nfe:
            bctm_steps(nfe, experiment.design)
    context = context or load_context(experiment)

    rows = []
    for seed in experiment.seeds:
        start = time.perf_counter()
        reference = oracle_samples(context, experiment, seed)
        for phi in functions:
            estimate, std_error = _plain_estimate(eval_test_function(phi, reference))
            rows.append(
                ResultRow(
                    pipeline="oracle",
                    nfe=0,
                    phi=phi.value,
                    estimate=estimate,
                    std_error=std_error,
                    ess_percent=100.0,
                    seed=seed,
                    wall_clock=time.perf_counter() - start,
                )
            )

        for pipeline in experiment.pipelines:
            for nfe in experiment.nfe:
                start = time.perf_counter()
                ensemble = draw_ensemble(pipeline, nfe, seed, context, experiment)
                ess_percent = 100.0 if pipeline == "mc_only" else 100.0 * ess(ensemble) / len(ensemble)
                for phi in functions:
                    if pipeline == "mc_only":
                        estimate, std_error = _plain_estimate(eval_test_function(phi, ensemble.samples))
                    else:
                        estimate, std_error = snis_estimate(ensemble, phi)
                    rows.append(
                        ResultRow(
                            pipeline=pipeline,
                            nfe=nfe,
                            phi=phi.value,
                            estimate=estimate,
                            std_error=std_error,
                            ess_percent=ess_percent,
                            seed=seed,
                            wall_clock=time.perf_counter() - start,
                        )
                    )
        logger.info(f"Integral estimates done, seed={seed}, rows={len(rows)}")

    directory = run_directory(experiment)
    write_table(directory / "integral_table.csv", rows, {"samples": experiment.samples})
    write_table(directory / "integral_summary.csv", summarize_estimates(rows))
    return rows


def alignment_score(proposal: torch.Tensor, target: torch.Tensor) -> float:
    """Σ over t_0…t_{N−1} and coordinates of the 1-D Wasserstein distance between proposal and target samples."""
    score = 0.0
    for index in range(proposal.shape[0] - 1):
        for coordinate in range(proposal.shape[-1]):
            score += wasserstein_distance(proposal[index, :, coordinate].numpy(), target[index, :, coordinate].numpy())
    return score


def _dump_paths(path: Path, proposal: torch.Tensor, target: torch.Tensor, metadata: dict) -> None:
    blocks = []
    for side, paths in enumerate((proposal, target)):
        for index in range(paths.shape[0]):
            tags = torch.tensor([side, index], dtype=paths.dtype).expand(paths.shape[1], 2)
            blocks.append(torch.cat([tags, paths[index]], dim=-1))
    columns = ["is_target", "time_index"] + coordinate_columns(proposal.shape[-1])
    write_csv(path, torch.cat(blocks), columns, metadata)


def run_alignment_study(experiment: ExperimentConfig, context: RunContext | None = None) -> list[AlignmentRow]:
    """Compare proposal and target joints under the alternating and the SDE-only target designs.

    For every N in ``alignment_steps`` and every seed, both joints are sampled on the same grid family and scored
    by ``alignment_score``. Paths of the first seed are dumped to CSV and drawn as an SVG panel grid.
    """
    context = context or load_context(experiment, need_denoiser=False, need_trajectory=True)
    model = context.trajectory
    directory = run_directory(experiment)

    rows = []
    for n_steps in experiment.alignment_steps:
        panels = {}
        for design in ("alternating", "sde_only"):
            grid_file = experiment.grid_file if design == experiment.design else None
            grid = context.grid(n_steps, experiment.mode, design, grid_file, experiment.tune, experiment.tune_bank_size)
            for seed in experiment.seeds:
                start = time.perf_counter()
                target_rng = stream(seed, "target")
                with torch.no_grad():
                    proposal = proposal_rollout(model, grid, experiment.samples, stream(seed, "proposal"))
                    x0 = sample_target(context.target, experiment.samples, target_rng, context.reservoir)
                    target = target_rollout(model, grid, x0, target_rng)
                paths = proposal.trajectories.detach()  # type: ignore[union-attr]
                rows.append(
                    AlignmentRow(
                        design=design,  # type: ignore[arg-type]
                        n_steps=n_steps,
                        seed=seed,
                        wasserstein=alignment_score(paths, target),
                        wall_clock=time.perf_counter() - start,
                    )
                )
                logger.info(f"Alignment, design={design}, N={n_steps}, seed={seed}, score={rows[-1].wasserstein:.4f}")
                if seed == experiment.seeds[0]:
                    panels[design] = (paths, target)
                    metadata = {"design": design, "n_steps": n_steps, "seed": seed, "grid_hash": grid.grid_hash()}
                    _dump_paths(directory / f"alignment_{design}_n{n_steps}.csv", paths, target, metadata)
        plots.alignment_svg(directory / f"alignment_n{n_steps}.svg", panels)

    write_table(directory / "alignment.csv", rows, {"samples": experiment.samples})
    return rows

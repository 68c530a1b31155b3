from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import Sequence

import torch
from pydantic import BaseModel, ValidationError

from boltzbit.errors import BoltzBitError, CheckFailedError, ConfigError
from boltzbit.is_engine import baseline_ddpm_is, bctm_is
from boltzbit.models import build_denoiser, build_trajectory_model, load_checkpoint, save_checkpoint
from boltzbit.numerics import RandomStream
from boltzbit.sampling import ancestral_sample, cm_multistep_sample, log_schedule, rho_schedule
from boltzbit.schedule_opt import ScheduleParams, build_time_grid, load_grid, save_grid, tune_grid
from boltzbit.schema import load_document
from boltzbit.schema.commands import DistillDocument, SampleDocument, TrainDmDocument, TuneDocument
from boltzbit.schema.experiments import ExperimentConfig
from boltzbit.schema.models import ArchitectureSpec
from boltzbit.settings import config
from boltzbit.targets import Dw4Target, Target, estimate_sigma_data, make_target, sample_target
from boltzbit.telemetry import prometheus
from boltzbit.training import distill_bctm, train_dsm

from .context import TUNE_BANK_STREAM, load_model, resolve_reservoir
from .experiments import bctm_steps, run_alignment_study, run_directory, run_ess_curve, run_integral_table
from .manifest import write_manifest
from .verify import run_suite

logger = logging.getLogger(__name__)

EXIT_USAGE = 2

DATA_STREAM = 9
SIGMA_STREAM = 10


def _load(path: Path, model: type[BaseModel], **overrides) -> BaseModel:
    """Read a config document and apply command-line overrides, revalidating the result."""
    document = load_document(path, model)
    updates = {key: value for key, value in overrides.items() if value is not None}
    if not updates:
        return document
    try:
        return model.model_validate({**document.model_dump(), **updates})
    except ValidationError as e:
        raise ConfigError(f"Invalid override, error={e}") from e


def _output(path: Path, args: argparse.Namespace) -> Path:
    return path if path.is_absolute() else (args.output_dir or config.output_dir) / path


def default_architecture(target: Target, architecture: ArchitectureSpec | None, sigma_data: float) -> ArchitectureSpec:
    if architecture is None:
        if isinstance(target, Dw4Target):
            architecture = ArchitectureSpec(
                kind="egnn", dim=target.dim, n_particles=target.n_particles, space_dim=target.space_dim
            )
        else:
            architecture = ArchitectureSpec(dim=target.dim)
    if architecture.dim != target.dim:
        raise ConfigError(f"Architecture dim {architecture.dim} does not match target dim {target.dim}")
    return architecture.model_copy(update={"sigma_data": sigma_data})


def _training_data(document, seed: int) -> tuple[Target, torch.Tensor, torch.Tensor | None]:
    target = make_target(document.target)
    reservoir = resolve_reservoir(document.target, document.reservoir, seed)
    return target, sample_target(target, document.data_size, RandomStream(seed, DATA_STREAM), reservoir), reservoir


def train_dm(args: argparse.Namespace) -> list[Path]:
    document = _load(args.config, TrainDmDocument)
    if args.iterations is not None:
        document.train = document.train.model_copy(update={"iterations": args.iterations})
    target, data, reservoir = _training_data(document, document.train.seed)
    sigma_data = document.sigma_data or estimate_sigma_data(
        target, RandomStream(document.train.seed, SIGMA_STREAM), reservoir=reservoir
    )
    architecture = default_architecture(target, document.architecture, sigma_data)
    logger.info(f"Training denoiser, dim={target.dim}, kind={architecture.kind}, sigma_data={sigma_data:.4f}")

    checkpoint, report = train_dsm(build_denoiser(architecture), data, document.train)
    output = _output(document.output, args)
    save_checkpoint(output, checkpoint)
    report.to_csv(output.with_suffix(".csv"))
    outputs = [output, output.with_suffix(".csv")]
    write_manifest(output.parent, "train-dm", document, [document.train.seed], {"denoiser": output}, outputs)
    return outputs


def distill(args: argparse.Namespace) -> list[Path]:
    document = _load(args.config, DistillDocument)
    if args.iterations is not None:
        document.distill = document.distill.model_copy(update={"iterations": args.iterations})
    teacher = load_checkpoint(document.teacher, "denoiser")
    teacher.model.requires_grad_(False)
    target, data, _ = _training_data(document, document.distill.seed)
    architecture = default_architecture(target, document.architecture or teacher.architecture, teacher.sigma_data)
    logger.info(f"Distilling trajectory model, teacher={document.teacher}, kind={architecture.kind}")

    student = build_trajectory_model(architecture)
    checkpoint, report = distill_bctm(student, teacher.model.score, data, document.distill)
    checkpoint.metadata["teacher_config_hash"] = teacher.config_hash
    output = _output(document.output, args)
    save_checkpoint(output, checkpoint)
    report.to_csv(output.with_suffix(".csv"))
    outputs = [output, output.with_suffix(".csv")]
    checkpoints = {"teacher": document.teacher, "trajectory": output}
    write_manifest(output.parent, "distill-bctm", document, [document.distill.seed], checkpoints, outputs)
    return outputs


def tune(args: argparse.Namespace) -> list[Path]:
    document = _load(args.config, TuneDocument, n_steps=args.n_steps)
    if args.steps is not None:
        document.tune = document.tune.model_copy(update={"steps": args.steps})
    target = make_target(document.target)
    reservoir = resolve_reservoir(document.target, document.reservoir)
    model = load_model(document.trajectory, "trajectory", target)
    bank = sample_target(target, document.bank_size, RandomStream(document.tune.seed, TUNE_BANK_STREAM), reservoir)

    params = ScheduleParams.uniform(document.n_steps, document.mode, document.design)
    params = tune_grid(params, model, target, bank, document.tune)
    output = _output(document.output, args)
    save_grid(output, params, model.eps, model.t_max)
    checkpoints = {"trajectory": document.trajectory}
    write_manifest(output.parent, "tune-grid", document, [document.tune.seed], checkpoints, [output])
    return [output]


def sample(args: argparse.Namespace) -> list[Path]:
    document = _load(args.config, SampleDocument, samples=args.samples, seed=args.seed, nfe=args.nfe)
    target = make_target(document.target)
    rng = RandomStream(document.seed)
    output = _output(document.output, args)
    kind = "trajectory" if document.sampler in ("bctm_is", "cm_multistep") else "denoiser"
    model = load_model(document.checkpoint, kind, target)
    schedule_for = rho_schedule if document.schedule == "rho" else log_schedule
    kwargs = {"rho": document.rho} if document.schedule == "rho" else {}

    with torch.no_grad():
        match document.sampler:
            case "ddpm_is":
                schedule = schedule_for(document.nfe, model.eps, model.t_max, **kwargs)
                baseline_ddpm_is(model, target, schedule, document.eta, document.samples, rng).to_csv(output)
            case "mc_only":
                schedule = schedule_for(document.nfe, model.eps, model.t_max, **kwargs)
                ancestral_sample(model, schedule, document.eta, document.samples, rng).to_csv(output)
            case "bctm_is":
                if document.grid_file is not None:
                    _, grid = load_grid(document.grid_file)
                else:
                    params = ScheduleParams.uniform(
                        bctm_steps(document.nfe, document.design), document.mode, document.design
                    )
                    grid = build_time_grid(params, model.eps, model.t_max).detach()
                bctm_is(model, target, grid, document.samples, rng).to_csv(output)
            case "cm_multistep":
                anchors = schedule_for(document.nfe, model.eps, model.t_max, **kwargs).descending[:-1]
                cm_multistep_sample(model, anchors, document.samples, rng).to_csv(output)

    checkpoints = {"checkpoint": document.checkpoint}
    write_manifest(output.parent, "sample", document, [document.seed], checkpoints, [output])
    return [output]


def _experiment(args: argparse.Namespace) -> ExperimentConfig:
    seeds = list(range(args.seeds)) if args.seeds is not None else None
    document = _load(
        args.config, ExperimentConfig, seeds=seeds, samples=args.samples, nfe=args.nfe, output_dir=args.output_dir
    )
    return document  # type: ignore[return-value]


def _experiment_outputs(command: str, experiment: ExperimentConfig) -> list[Path]:
    directory = run_directory(experiment)
    outputs = sorted(path for path in directory.iterdir() if path.suffix in (".csv", ".svg"))
    checkpoints = {"denoiser": experiment.denoiser, "trajectory": experiment.trajectory}
    write_manifest(directory, command, experiment, experiment.seeds, checkpoints, outputs)
    return outputs


def ess_curve(args: argparse.Namespace) -> list[Path]:
    experiment = _experiment(args)
    run_ess_curve(experiment)
    return _experiment_outputs("ess-curve", experiment)


def integral_table(args: argparse.Namespace) -> list[Path]:
    experiment = _experiment(args)
    run_integral_table(experiment)
    return _experiment_outputs("integral-table", experiment)


def alignment_study(args: argparse.Namespace) -> list[Path]:
    experiment = _experiment(args)
    run_alignment_study(experiment)
    return _experiment_outputs("alignment-study", experiment)


def verify(args: argparse.Namespace) -> list[Path]:
    results = run_suite(args.check or None)
    failed = [result.name for result in results if not result.passed]
    if failed:
        raise CheckFailedError(f"Invariant checks failed, checks={failed}")
    logger.info(f"All {len(results)} invariant checks passed")
    return []


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boltzbit", description="Few-step unbiased sampling with bidirectional trajectory models."
    )
    parser.add_argument("--output-dir", type=Path, default=None, help="Directory for relative output paths.")
    commands = parser.add_subparsers(dest="command", required=True)

    def command(name: str, handler, help: str, config_required: bool = True) -> argparse.ArgumentParser:
        sub = commands.add_parser(name, help=help)
        if config_required:
            sub.add_argument("config", type=Path, help="YAML config document.")
        sub.set_defaults(handler=handler)
        return sub

    for name, handler, help in (
        ("train-dm", train_dm, "Train a denoiser by score matching."),
        ("distill-bctm", distill, "Distill a bidirectional trajectory model from a denoiser."),
    ):
        command(name, handler, help).add_argument("--iterations", type=int, default=None)

    sub = command("tune-grid", tune, "Tune the alternating time grid by forward KL.")
    sub.add_argument("--steps", type=int, default=None, help="Optimizer steps.")
    sub.add_argument("--n-steps", type=int, default=None, help="Grid size N.")

    sub = command("sample", sample, "Draw samples or a weighted ensemble and write them to CSV.")
    sub.add_argument("--samples", type=int, default=None)
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--nfe", type=int, default=None)

    for name, handler, help in (
        ("ess-curve", ess_curve, "ESS against NFE for each pipeline."),
        ("integral-table", integral_table, "Oracle, MC and IS estimates of test-function integrals."),
        ("alignment-study", alignment_study, "Proposal/target alignment of the alternating and SDE-only designs."),
    ):
        sub = command(name, handler, help)
        sub.add_argument("--seeds", type=int, default=None, help="Use seeds 0..SEEDS-1.")
        sub.add_argument("--samples", type=int, default=None, help="Samples per seed.")
        sub.add_argument("--nfe", type=int, nargs="+", default=None, help="NFE budgets.")

    sub = command("verify", verify, "Run the fast invariant suite.", config_required=False)
    sub.add_argument("--check", action="append", default=None, help="Run only the named check; repeatable.")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_arg_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else 0

    try:
        outputs = args.handler(args)
    except BoltzBitError as e:
        logger.error(f"{args.command} failed, {type(e).__name__}: {e.detail}")
        return e.exit_code
    finally:
        if config.metrics.prometheus.enable:
            prometheus.write((args.output_dir or config.output_dir) / "metrics.prom")

    for path in outputs:
        logger.info(f"Output, path={path}")
    return 0

"""Fast invariant suite behind ``boltzbit verify``; every check runs in seconds on one core."""

from __future__ import annotations

import copy
import logging
import math
import time
from dataclasses import dataclass
from typing import Callable

import torch

from boltzbit.errors import GridError
from boltzbit.is_engine import baseline_ddpm_is, bctm_is, ess, gaussian_matched_grid
from boltzbit.models import GaussianFlow, GaussianPosteriorDenoiser, build_denoiser, build_trajectory_model
from boltzbit.numerics import RandomStream, check_grad, parameter_function
from boltzbit.sampling import ddim_step, forward_noise, log_schedule
from boltzbit.schedule_opt import ScheduleParams, build_time_grid, forward_kl_terms
from boltzbit.schema.models import ArchitectureSpec
from boltzbit.schema.training import DistillConfig
from boltzbit.settings import config
from boltzbit.targets import GmmTarget, ZeroCogSpace
from boltzbit.training import distill_loss, dsm_loss, sample_distill_times, sample_training_times

logger = logging.getLogger(__name__)

GRADIENT_TOLERANCE = 1e-4


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def perturb(model: torch.nn.Module, rng: RandomStream, scale: float = 0.1) -> torch.nn.Module:
    """Add noise to every parameter so zero-initialized heads produce non-trivial outputs."""
    with torch.no_grad():
        for p in model.parameters():
            p.add_(scale * rng.normal(*p.shape).reshape(p.shape))
    return model


def gaussian_exactness_bctm() -> tuple[bool, str]:
    details, passed = [], True
    for n_steps in (1, 3, 6):
        grid = gaussian_matched_grid(n_steps, config.eps, config.t_max)
        flow = GaussianFlow(torch.zeros(2, dtype=torch.float64), 0.0)
        target = GmmTarget.gaussian(torch.zeros(2, dtype=torch.float64), grid.t[0].item() ** 2)
        ensemble = bctm_is(flow, target, grid, 2000, RandomStream(n_steps))
        spread = ensemble.log_weights.var().item()
        ratio = ess(ensemble) / len(ensemble)
        passed &= spread < 1e-8 and ratio > 0.999
        details.append(f"N={n_steps}: var={spread:.1e}, ess/K={ratio:.4f}")
    return passed, "; ".join(details)


def gaussian_exactness_baseline() -> tuple[bool, str]:
    denoiser = GaussianPosteriorDenoiser(torch.zeros(2, dtype=torch.float64), 0.0)
    target = GmmTarget.gaussian(torch.zeros(2, dtype=torch.float64), config.eps**2)
    schedule = log_schedule(20, config.eps, config.t_max)
    ensemble = baseline_ddpm_is(denoiser, target, schedule, 1.0, 2000, RandomStream(0))
    ratio = ess(ensemble) / len(ensemble)
    return ratio > 0.99, f"ess/K={ratio:.4f}"


def grid_fuzz(trials: int = 1000) -> tuple[bool, str]:
    rng = RandomStream(0)
    valid = rejected = 0
    for _ in range(trials):
        n_steps = int(rng.integers(1, 9, size=1)[0])
        mode = "free" if rng.uniform(1).item() < 0.5 else "variance_matched"
        params = ScheduleParams.uniform(n_steps, mode)  # type: ignore[arg-type]
        params = params.with_vector(4.0 * rng.normal(len(params.vector())))
        try:
            build_time_grid(params, config.eps, config.t_max)
            valid += 1
        except GridError:
            rejected += 1
    return valid > 0, f"valid={valid}, rejected={rejected}"


def _rotation(angle: float) -> torch.Tensor:
    c, s = math.cos(angle), math.sin(angle)
    return torch.tensor([[c, -s], [s, c]], dtype=torch.float64)


def egnn_equivariance(trials: int = 100) -> tuple[bool, str]:
    rng = RandomStream(0)
    architecture = ArchitectureSpec(kind="egnn", dim=8, n_particles=4, space_dim=2, width=32, depth=2)
    model = perturb(build_denoiser(architecture), rng)
    x = model.space.normal(16, rng)
    t = torch.full((16,), 1.3, dtype=torch.float64)
    worst = 0.0
    with torch.no_grad():
        reference = model.denoise(x, t).reshape(16, 4, 2)
        for _ in range(trials):
            rotation = _rotation(2 * math.pi * rng.uniform(1).item())
            permutation = torch.from_numpy(rng.permutation(4))
            shift = rng.normal(1, 1, 2)
            moved = (x.reshape(16, 4, 2)[:, permutation] @ rotation.T + shift).reshape(16, 8)
            expected = reference[:, permutation] @ rotation.T
            worst = max(worst, (model.denoise(moved, t).reshape(16, 4, 2) - expected).abs().max().item())
    return worst < 1e-5, f"max deviation={worst:.1e}"


def ddim_euler_identity() -> tuple[bool, str]:
    rng = RandomStream(0)
    denoiser = GaussianPosteriorDenoiser(torch.tensor([0.5, -1.0], dtype=torch.float64), 2.0)
    x = 3.0 * rng.normal(1000, 2)
    t_n, t_prev = 2.0, 1.5
    step = ddim_step(denoiser, x, t_n, t_prev, 0.0, rng)
    euler = x + (t_prev - t_n) * (x - denoiser.denoise(x, t_n)) / t_n
    worst = (step - euler).abs().max().item()
    return worst < 1e-10, f"max deviation={worst:.1e}"


def zero_cog_kernels() -> tuple[bool, str]:
    rng = RandomStream(0)
    space = ZeroCogSpace(4, 2)
    x = space.normal(1000, rng)
    noised = forward_noise(x, 0.5, 3.0, rng, space)
    worst = noised.reshape(-1, 4, 2).mean(dim=1).abs().max().item()
    return worst < 1e-12, f"max centre of gravity={worst:.1e}"


def _loss_gradients() -> dict[str, float]:
    rng = RandomStream(0)
    architecture = ArchitectureSpec(dim=2, width=16, depth=2)
    errors = {}

    denoiser = perturb(build_denoiser(architecture), rng)
    x0 = rng.normal(32, 2)
    t = sample_training_times(rng, 32, -1.2, 1.2, config.eps, config.t_max)
    noise = rng.normal(32, 2)
    f, flat = parameter_function(denoiser, lambda m: dsm_loss(m, x0, t, noise))
    errors["dsm"] = check_grad(f, flat, rng)

    student = perturb(build_trajectory_model(architecture), rng)
    ema = copy.deepcopy(student).requires_grad_(False)
    teacher = GaussianPosteriorDenoiser(torch.zeros(2, dtype=torch.float64), 1.0)
    distill = DistillConfig()
    t, s, u = sample_distill_times(rng, 32, distill, config.eps, config.t_max)
    f, flat = parameter_function(student, lambda m: distill_loss(m, ema, teacher.score, x0, t, s, u, noise, distill)[1])
    errors["ctm"] = check_grad(f, flat, rng)

    flow = GaussianFlow(torch.zeros(2, dtype=torch.float64), 1.0)
    target = GmmTarget.gaussian(torch.zeros(2, dtype=torch.float64), 1.0)
    params = ScheduleParams.uniform(3)
    path_noise = [rng.normal(64, 2) for _ in range(3)]
    start = target.sample_exact(64, rng)

    def objective(vector: torch.Tensor) -> torch.Tensor:
        grid = build_time_grid(params.with_vector(vector), config.eps, config.t_max)
        return forward_kl_terms(grid, flow, target, start, noise=path_noise).mean()

    errors["forward_kl"] = check_grad(objective, params.vector(), rng)
    return errors


def loss_gradients() -> tuple[bool, str]:
    errors = _loss_gradients()
    return all(e < GRADIENT_TOLERANCE for e in errors.values()), ", ".join(f"{k}={v:.1e}" for k, v in errors.items())


CHECKS: dict[str, Callable[[], tuple[bool, str]]] = {
    "gaussian_exactness_bctm": gaussian_exactness_bctm,
    "gaussian_exactness_baseline": gaussian_exactness_baseline,
    "grid_fuzz": grid_fuzz,
    "egnn_equivariance": egnn_equivariance,
    "ddim_euler_identity": ddim_euler_identity,
    "zero_cog_kernels": zero_cog_kernels,
    "loss_gradients": loss_gradients,
}


def run_suite(names: list[str] | None = None) -> list[CheckResult]:
    results = []
    for name in names or list(CHECKS):
        start = time.perf_counter()
        try:
            passed, detail = CHECKS[name]()
        except Exception as e:
            logger.exception(f"Check raised, check={name}")
            passed, detail = False, f"{type(e).__name__}: {e}"
        results.append(CheckResult(name, passed, detail, time.perf_counter() - start))
        level = logging.INFO if passed else logging.ERROR
        logger.log(level, f"{'PASS' if passed else 'FAIL'} {name}, {detail}")
    return results

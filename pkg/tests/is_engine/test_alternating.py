import pytest
import torch

from boltzbit.errors import ContractError, GridError
from boltzbit.harness.verify import perturb
from boltzbit.is_engine import (
    TimeGrid,
    bctm_is,
    ess,
    gaussian_matched_grid,
    proposal_log_density,
    proposal_rollout,
    target_log_density,
    target_rollout,
    target_traverse_count,
)
from boltzbit.models import GaussianFlow, build_trajectory_model
from boltzbit.numerics import RandomStream, gaussian_log_density
from boltzbit.schedule_opt import ScheduleParams, build_time_grid
from boltzbit.targets import GmmTarget

EPS, T_MAX = 0.002, 80.0


def _generic_grid(n_steps):
    params = ScheduleParams.uniform(n_steps)
    return build_time_grid(params.with_vector(0.3 * torch.ones(2 * n_steps, dtype=torch.float64)), EPS, T_MAX)


@pytest.mark.parametrize("n_steps", [1, 3, 6])
def test_gaussian_exactness(zeros2, n_steps):
    grid = gaussian_matched_grid(n_steps, EPS, T_MAX)
    flow = GaussianFlow(zeros2, 0.0)
    target = GmmTarget.gaussian(zeros2, grid.t[0].item() ** 2)
    ensemble = bctm_is(flow, target, grid, 2000, RandomStream(n_steps))
    assert ensemble.log_weights.var().item() < 1e-8
    assert ess(ensemble) / len(ensemble) > 0.999


def test_single_step_proposal(zeros2):
    grid = gaussian_matched_grid(1, EPS, T_MAX)
    flow = GaussianFlow(zeros2, 1.0)
    noise = [RandomStream(0).normal(5, 2), RandomStream(1).normal(5, 2)]
    ensemble = proposal_rollout(flow, grid, 5, noise=noise)

    x_T = T_MAX * noise[0]
    mean = flow.traverse(x_T, T_MAX, EPS)
    variance = grid.t[0] ** 2 - EPS**2
    x_0 = mean + variance.sqrt() * noise[1]
    assert torch.allclose(ensemble.samples, x_0, atol=1e-12)
    expected = gaussian_log_density(x_T, torch.zeros_like(x_T), T_MAX**2) + gaussian_log_density(x_0, mean, variance)
    assert torch.allclose(ensemble.log_proposal, expected, atol=1e-10)
    assert ensemble.trajectories.shape == (2, 5, 2)
    assert ensemble.nfe == 1


def test_proposal_log_density_recomputes_rollout(small_mlp, rng):
    model = perturb(build_trajectory_model(small_mlp), rng)
    grid = _generic_grid(4)
    with torch.no_grad():
        ensemble = proposal_rollout(model, grid, 16, rng)
        recomputed = proposal_log_density(model, ensemble.trajectories, grid)
    assert torch.allclose(recomputed, ensemble.log_proposal, atol=1e-10)


def test_vanishing_proposal_variance_rejected(zeros2):
    grid = TimeGrid.from_lists([0.5, T_MAX], [0.5], [EPS])
    bad = TimeGrid.from_lists([0.5, 2.0, T_MAX], [0.5, 2.0], [EPS, 2.0])
    proposal_rollout(GaussianFlow(zeros2, 1.0), grid, 4, RandomStream(0))
    with pytest.raises(GridError):
        proposal_rollout(GaussianFlow(zeros2, 1.0), bad, 4, RandomStream(0))


def test_target_density_with_anchored_target_time(two_mode_gmm, rng):
    grid = TimeGrid.from_lists([0.5, T_MAX], [0.5], [EPS])
    flow = GaussianFlow(torch.zeros(2, dtype=torch.float64), 1.0)
    x0 = two_mode_gmm.sample_exact(8, rng)
    path = target_rollout(flow, grid, x0, rng)
    expected = two_mode_gmm.unnorm_log_density(path[0]) + gaussian_log_density(path[1], path[0], T_MAX**2 - 0.25)
    assert torch.allclose(target_log_density(flow, path, two_mode_gmm, grid), expected, atol=1e-10)
    assert flow.evaluations == 0


def test_target_density_brute_force(small_mlp, two_mode_gmm, rng):
    model = perturb(build_trajectory_model(small_mlp), rng)
    grid = _generic_grid(3)
    with torch.no_grad():
        path = target_rollout(model, grid, two_mode_gmm.sample_exact(8, rng), rng) + 0.75
        total = two_mode_gmm.unnorm_log_density(path[0])
        for n in range(1, 4):
            mean = model.traverse(path[n - 1], grid.t[n - 1].item(), grid.t_tar[n - 1].item())
            variance = grid.t[n] ** 2 - grid.t_tar[n - 1] ** 2
            total = total + gaussian_log_density(path[n], mean, variance)
        assert torch.allclose(target_log_density(model, path, two_mode_gmm, grid), total, atol=1e-10)


def test_missing_path_slot(zeros2, two_mode_gmm):
    grid = _generic_grid(2)
    flow = GaussianFlow(zeros2, 1.0)
    x = torch.zeros(4, 2, dtype=torch.float64)
    with pytest.raises(ContractError):
        target_log_density(flow, [x, None, x], two_mode_gmm, grid)
    with pytest.raises(ContractError):
        proposal_log_density(flow, [x, x], grid)


def test_rollout_needs_randomness(zeros2):
    with pytest.raises(ContractError):
        proposal_rollout(GaussianFlow(zeros2, 1.0), _generic_grid(2), 4)


def test_nfe_accounting(zeros2, two_mode_gmm):
    flow = GaussianFlow(zeros2, 1.0)
    alternating = _generic_grid(3)
    assert target_traverse_count(alternating) == 3
    ensemble = bctm_is(flow, two_mode_gmm, alternating, 16, RandomStream(0))
    assert ensemble.nfe == 6
    assert flow.evaluations == 6

    params = ScheduleParams.uniform(3, design="sde_only")
    sde_only = build_time_grid(params, EPS, T_MAX)
    assert target_traverse_count(sde_only) == 0
    assert bctm_is(flow, two_mode_gmm, sde_only, 16, RandomStream(0)).nfe == 3


def test_bctm_is_weights(zeros2, two_mode_gmm):
    flow = GaussianFlow(zeros2, 1.0)
    grid = _generic_grid(2)
    ensemble = bctm_is(flow, two_mode_gmm, grid, 32, RandomStream(4, 2))
    log_target = target_log_density(flow, ensemble.trajectories, two_mode_gmm, grid)
    assert torch.allclose(ensemble.log_weights, log_target - ensemble.log_proposal, atol=1e-10)
    assert torch.equal(ensemble.samples, ensemble.trajectories[0])
    assert ensemble.metadata["pipeline"] == "bctm_is"
    assert ensemble.metadata["stream"] == 2
    weights = ensemble.normalized_weights()
    assert ess(ensemble) == pytest.approx(1 / (weights**2).sum().item(), rel=1e-12)


def test_bctm_is_reproducible(zeros2, two_mode_gmm):
    flow = GaussianFlow(zeros2, 1.0)
    grid = _generic_grid(2)
    a = bctm_is(flow, two_mode_gmm, grid, 16, RandomStream(1, 2))
    b = bctm_is(flow, two_mode_gmm, grid, 16, RandomStream(1, 2))
    assert torch.equal(a.log_weights, b.log_weights)


def test_zero_cog_rollouts(small_egnn, rng):
    model = perturb(build_trajectory_model(small_egnn), rng)
    grid = _generic_grid(2)
    with torch.no_grad():
        ensemble = proposal_rollout(model, grid, 8, rng)
    centres = ensemble.trajectories.reshape(3, 8, 4, 2).mean(dim=2)
    assert centres.abs().max().item() < 1e-10


def test_alternating_design_aligns_joint(zeros2):
    grid = gaussian_matched_grid(3, EPS, T_MAX)
    sde_only = TimeGrid.from_lists(grid.t.tolist(), grid.t[:-1].tolist(), grid.t_prop.tolist())
    assert target_traverse_count(sde_only) == 0
    flow = GaussianFlow(zeros2, 0.0)
    target = GmmTarget.gaussian(zeros2, grid.t[0].item() ** 2)

    aligned = bctm_is(flow, target, grid, 4000, RandomStream(0))
    noised = bctm_is(flow, target, sde_only, 4000, RandomStream(0))
    assert aligned.log_weights.var().item() < 1e-8
    assert noised.log_weights.var().item() > 1e-3
    assert ess(noised) < ess(aligned)


def test_proposal_marginals_follow_noise_levels(zeros2):
    grid = _generic_grid(4)
    ensemble = proposal_rollout(GaussianFlow(zeros2, 0.0), grid, 20000, RandomStream(3))
    # a point-mass flow keeps every proposal marginal at N(0, t_n²)
    second_moments = ensemble.trajectories.pow(2).mean(dim=(1, 2))
    assert torch.allclose(second_moments, grid.t**2, rtol=0.05)

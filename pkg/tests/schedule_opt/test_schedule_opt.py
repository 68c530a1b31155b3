import json
import math

import pytest
import torch

from boltzbit.errors import ConfigError, GridError, TuningError
from boltzbit.harness.verify import grid_fuzz
from boltzbit.is_engine import bctm_is, ess, gaussian_matched_grid
from boltzbit.models import GaussianFlow
from boltzbit.numerics import RandomStream
from boltzbit.schedule_opt import (
    ScheduleParams,
    build_time_grid,
    forward_kl_objective,
    forward_kl_terms,
    load_grid,
    save_grid,
    tune_grid,
)
from boltzbit.schema.tuning import TuneConfig
from boltzbit.targets import GmmTarget

EPS, T_MAX = 0.002, 80.0


class NanTarget:
    def unnorm_log_density(self, x):
        return x.sum(dim=-1) * float("nan")


def _params(n_steps, raw_mu, raw_eta, **kwargs):
    params = ScheduleParams.uniform(n_steps, **kwargs)
    mu = torch.full((n_steps,), raw_mu, dtype=torch.float64)
    eta = torch.full((n_steps,), raw_eta, dtype=torch.float64)
    return params.with_vector(torch.cat([mu, eta, params.vector()[2 * n_steps :]]))


def test_single_step_substitution():
    grid = build_time_grid(ScheduleParams.uniform(1), EPS, T_MAX)
    provisional = 0.5 * (T_MAX - EPS) + EPS
    tar = 0.5 * (T_MAX - provisional) + provisional
    t_0 = min(math.sqrt(max(T_MAX**2 - tar**2 + EPS**2, EPS**2)), tar)
    assert grid.t.tolist() == pytest.approx([t_0, T_MAX], rel=1e-12)
    assert grid.t_tar.item() == pytest.approx(tar, rel=1e-12)
    assert grid.t_prop.tolist() == [EPS]


def test_variance_matching_identity():
    grid = build_time_grid(_params(5, 0.0, 3.0), EPS, T_MAX)
    assert torch.allclose(grid.target_variances(), grid.proposal_variances(), rtol=1e-10, atol=0)


def test_exact_gaussian_grid_is_not_variance_matched():
    grid = gaussian_matched_grid(3, EPS, T_MAX)
    ratios = grid.proposal_variances() / grid.target_variances()
    assert torch.allclose(ratios, (grid.t[:-1] / grid.t[1:]) ** 2, rtol=1e-10)
    assert (ratios < 1).all()


def test_crowded_grid_stays_ordered():
    grid = build_time_grid(_params(3, 4.0, 0.0), EPS, T_MAX)
    assert (grid.t[1:] > grid.t[:-1]).all()
    assert grid.t[-2].item() > 0.95 * T_MAX


def test_saturated_target_time_is_rejected():
    with pytest.raises(GridError) as e:
        build_time_grid(_params(2, 0.0, 50.0), EPS, T_MAX)
    assert e.value.index is not None


def test_free_mode():
    params = ScheduleParams.uniform(4, mode="free")
    assert params.raw_gamma.shape == (3,)
    grid = build_time_grid(params, EPS, T_MAX)
    mu = 0.5
    assert grid.t[0].item() == pytest.approx(mu * (grid.t[1].item() - EPS) + EPS, rel=1e-12)
    assert grid.t_prop[1].item() == pytest.approx(0.5 * (grid.t[1].item() - EPS) + EPS, rel=1e-12)


def test_sde_only_design():
    params = ScheduleParams.uniform(3, design="sde_only")
    assert torch.equal(params.eta, torch.zeros(3, dtype=torch.float64))
    grid = build_time_grid(params, EPS, T_MAX)
    assert torch.equal(grid.t_tar, grid.t[:-1])


def test_params_validation():
    with pytest.raises(ConfigError):
        ScheduleParams(torch.zeros(3), torch.zeros(2))
    with pytest.raises(ConfigError):
        ScheduleParams(torch.zeros(3), torch.zeros(3), torch.zeros(2))
    with pytest.raises(ConfigError):
        ScheduleParams(torch.zeros(3), torch.zeros(3), torch.zeros(3), mode="free")
    with pytest.raises(ConfigError):
        ScheduleParams(torch.zeros(0), torch.zeros(0))


def test_grid_gradients_reach_raw_parameters():
    vector = ScheduleParams.uniform(3).vector().requires_grad_(True)
    grid = build_time_grid(ScheduleParams.uniform(3).with_vector(vector), EPS, T_MAX)
    (grid.t.sum() + grid.t_tar.sum() + grid.t_prop.sum()).backward()
    assert torch.isfinite(vector.grad).all()
    assert vector.grad.abs().sum().item() > 0


def test_grid_fuzz():
    passed, detail = grid_fuzz(200)
    assert passed, detail


def test_objective_constant_on_exact_case(zeros2, rng):
    grid = gaussian_matched_grid(4, EPS, T_MAX)
    flow = GaussianFlow(zeros2, 0.0)
    target = GmmTarget.gaussian(zeros2, grid.t[0].item() ** 2)
    terms = forward_kl_terms(grid, flow, target, target.sample_exact(500, rng), rng)
    assert terms.var().item() < 1e-8


def test_objective_consistent_across_sample_sizes(zeros2, two_mode_gmm):
    grid = build_time_grid(ScheduleParams.uniform(3), EPS, T_MAX)
    flow = GaussianFlow(zeros2, 1.0)
    bank = two_mode_gmm.sample_exact(20000, RandomStream(0))
    terms = forward_kl_terms(grid, flow, two_mode_gmm, bank, RandomStream(1))
    big = terms.mean().item()
    small = [forward_kl_objective(grid, flow, two_mode_gmm, bank, 1, RandomStream(2, i)).item() for i in range(200)]
    standard_error = terms.std().item() / math.sqrt(len(small))
    assert abs(sum(small) / len(small) - big) < 4 * standard_error + 4 * terms.std().item() / math.sqrt(len(bank))


def test_objective_reproducible(zeros2, two_mode_gmm):
    grid = build_time_grid(ScheduleParams.uniform(2), EPS, T_MAX)
    flow = GaussianFlow(zeros2, 1.0)
    bank = two_mode_gmm.sample_exact(100, RandomStream(0))
    a = forward_kl_objective(grid, flow, two_mode_gmm, bank, 32, RandomStream(3))
    b = forward_kl_objective(grid, flow, two_mode_gmm, bank, 32, RandomStream(3))
    assert a.item() == b.item()


def test_tune_zero_steps(zeros2, two_mode_gmm):
    params = ScheduleParams.uniform(3)
    bank = two_mode_gmm.sample_exact(100, RandomStream(0))
    tuned = tune_grid(params, GaussianFlow(zeros2, 1.0), two_mode_gmm, bank, TuneConfig(steps=0))
    assert torch.equal(tuned.vector(), params.vector())
    assert tuned.objective_trace == []


def test_tune_keeps_best(zeros2, two_mode_gmm):
    params = ScheduleParams.uniform(3)
    bank = two_mode_gmm.sample_exact(1000, RandomStream(0))
    flow = GaussianFlow(zeros2, 1.0)
    tune = TuneConfig(steps=10, paths=64, learning_rate=0.1)
    tuned = tune_grid(params, flow, two_mode_gmm, bank, tune)
    assert len(tuned.objective_trace) == 10
    again = tune_grid(params, flow, two_mode_gmm, bank, tune)
    assert torch.equal(tuned.vector(), again.vector())
    build_time_grid(tuned, EPS, T_MAX)


def test_tune_rejects_nan_objective(zeros2):
    bank = torch.ones(10, 2, dtype=torch.float64)
    with pytest.raises(TuningError) as e:
        tune_grid(ScheduleParams.uniform(2), GaussianFlow(zeros2, 1.0), NanTarget(), bank, TuneConfig(steps=3, paths=4))
    assert e.value.step == 1


@pytest.mark.slow
def test_tuning_improves_ess(two_mode_gmm):
    flow = GaussianFlow(torch.tensor([1.2, 0.7], dtype=torch.float64), 9.0)
    bank = two_mode_gmm.sample_exact(20000, RandomStream(0))
    params = ScheduleParams.uniform(6)
    tuned = tune_grid(params, flow, two_mode_gmm, bank, TuneConfig(steps=200, paths=256))
    before = build_time_grid(params, EPS, T_MAX).detach()
    after = build_time_grid(tuned, EPS, T_MAX).detach()
    for seed in range(100, 105):
        untuned_ess = ess(bctm_is(flow, two_mode_gmm, before, 5000, RandomStream(seed)))
        tuned_ess = ess(bctm_is(flow, two_mode_gmm, after, 5000, RandomStream(seed)))
        assert tuned_ess > untuned_ess


def test_storage_round_trip(tmp_path):
    params = _params(4, -0.5, 0.7, mode="free")
    params.objective_trace = [3.0, 2.5]
    path = tmp_path / "grid.json"
    document = save_grid(path, params, EPS, T_MAX)

    loaded, grid = load_grid(path)
    assert torch.equal(loaded.vector(), params.vector())
    assert loaded.mode == "free"
    assert loaded.objective_trace == [3.0, 2.5]
    assert grid.grid_hash() == document.grid_hash


def test_storage_detects_tampering(tmp_path):
    path = tmp_path / "grid.json"
    save_grid(path, ScheduleParams.uniform(2), EPS, T_MAX)
    data = json.loads(path.read_text())
    data["t"][0] *= 1.01
    path.write_text(json.dumps(data))
    with pytest.raises(ConfigError):
        load_grid(path)

import math

import pytest
import torch

import boltzbit.is_engine.ensemble as ensemble_module
from boltzbit.errors import DegenerateEnsembleError, DegenerateProposalError, ShapeError
from boltzbit.is_engine import WeightedEnsemble, baseline_ddpm_is, ess, merge_ensembles, snis_estimate
from boltzbit.models import AnalyticGmmDenoiser, GaussianPosteriorDenoiser
from boltzbit.numerics import RandomStream, gaussian_log_density
from boltzbit.sampling import log_schedule
from boltzbit.targets import GmmTarget

EPS, T_MAX = 0.002, 80.0


def _ensemble(log_weights, samples=None, nfe=4):
    log_weights = torch.tensor(log_weights, dtype=torch.float64)
    if samples is None:
        samples = torch.ones(len(log_weights), 2, dtype=torch.float64)
    return WeightedEnsemble(samples, log_weights, metadata={"nfe": nfe})


def test_ess_uniform():
    assert ess(_ensemble([0.3] * 10)) == pytest.approx(10.0)


def test_ess_dominant_weight():
    assert ess(_ensemble([0.0, -math.inf, -math.inf])) == pytest.approx(1.0)


def test_ess_hand_computed():
    assert ess(_ensemble([0.0, 0.0, math.log(2)])) == pytest.approx(8 / 3, abs=1e-12)


def test_ess_matches_definition(rng):
    ensemble = _ensemble(rng.normal(50).tolist())
    weights = ensemble.normalized_weights()
    assert ess(ensemble) == pytest.approx(1 / (weights**2).sum().item(), rel=1e-12)


def test_ess_out_of_range_raises(monkeypatch):
    exact = ensemble_module.log_sum_exp
    monkeypatch.setattr(ensemble_module, "log_sum_exp", lambda values: exact(values) + 1.0)
    with pytest.raises(DegenerateEnsembleError):
        ess(_ensemble([0.3] * 10))


def test_single_sample():
    ensemble = _ensemble([-12.5])
    assert ensemble.normalized_weights().item() == 1.0
    assert ess(ensemble) == 1.0


def test_snis_hand_computed():
    samples = torch.tensor([[math.e], [math.e**2], [math.e**3]], dtype=torch.float64)
    ensemble = _ensemble([0.0, math.log(2), math.log(3)], samples)
    estimate, _ = snis_estimate(ensemble, "log_l2_norm")
    assert estimate == pytest.approx(7 / 3, abs=1e-12)


def test_snis_equal_weights_is_sample_mean(rng):
    samples = rng.normal(20, 2)
    estimate, _ = snis_estimate(_ensemble([1.0] * 20, samples), "cos_l2_norm")
    assert estimate == pytest.approx(torch.cos(samples.norm(dim=-1)).mean().item(), abs=1e-12)


def _wide_proposal_ensemble(n, seed):
    # N(0, 4·I) proposals reweighted to N(0, I)
    samples = 2.0 * RandomStream(seed).normal(n, 2)
    zeros = torch.zeros_like(samples)
    log_weights = gaussian_log_density(samples, zeros, 1.0) - gaussian_log_density(samples, zeros, 4.0)
    return WeightedEnsemble(samples, log_weights)


def test_snis_consistent_across_ensemble_sizes():
    small, small_error = snis_estimate(_wide_proposal_ensemble(1000, 5), "cos_l2_norm")
    large, large_error = snis_estimate(_wide_proposal_ensemble(100_000, 6), "cos_l2_norm")
    assert abs(small - large) < 4 * math.hypot(small_error, large_error)
    exact = torch.cos(RandomStream(7).normal(200_000, 2).norm(dim=-1)).mean().item()
    assert abs(large - exact) < 4 * math.hypot(large_error, 1 / math.sqrt(200_000))


def test_snis_constant_function(rng):
    # every sample on the unit circle, so log‖x‖₂ ≡ 0
    angles = 2 * math.pi * rng.uniform(30)
    samples = torch.stack([torch.cos(angles), torch.sin(angles)], dim=-1)
    estimate, std_error = snis_estimate(_ensemble(rng.normal(30).tolist(), samples), "log_l2_norm")
    assert estimate == pytest.approx(0.0, abs=1e-12)
    assert std_error == pytest.approx(0.0, abs=1e-12)


def test_all_weights_vanish():
    with pytest.raises(DegenerateEnsembleError):
        ess(_ensemble([-math.inf, -math.inf]))


def test_nan_weights_rejected():
    with pytest.raises(DegenerateEnsembleError):
        _ensemble([0.0, float("nan")])


def test_weight_count_must_match():
    with pytest.raises(ShapeError):
        WeightedEnsemble(torch.zeros(3, 2, dtype=torch.float64), torch.zeros(2, dtype=torch.float64))


def test_merge():
    merged = merge_ensembles([_ensemble([0.0, 1.0]), _ensemble([2.0])])
    assert len(merged) == 3
    assert merged.log_weights.tolist() == [0.0, 1.0, 2.0]
    assert merged.metadata["shards"] == 2
    assert merged.nfe == 4


def test_merge_rejects_mixed_budgets():
    with pytest.raises(ShapeError):
        merge_ensembles([_ensemble([0.0], nfe=4), _ensemble([0.0], nfe=6)])
    with pytest.raises(DegenerateEnsembleError):
        merge_ensembles([])


def test_ensemble_csv(tmp_path):
    ensemble = _ensemble([0.0, -1.5])
    path = tmp_path / "ensemble.csv"
    ensemble.to_csv(path, {"seed": 3})
    lines = path.read_text().splitlines()
    assert lines[:2] == ["# nfe=4", "# seed=3"]
    assert lines[2] == "x0,x1,log_weight"
    assert lines[4] == "1.0,1.0,-1.5"


def test_baseline_exact_chain_has_uniform_weights(zeros2):
    denoiser = GaussianPosteriorDenoiser(zeros2, 0.0)
    target = GmmTarget.gaussian(zeros2, EPS**2)
    ensemble = baseline_ddpm_is(denoiser, target, log_schedule(20, EPS, T_MAX), 1.0, 2000, RandomStream(0))
    assert ess(ensemble) / len(ensemble) > 0.99
    assert ensemble.nfe == 20
    assert ensemble.trajectories.shape == (21, 2000, 2)
    assert ensemble.metadata["pipeline"] == "ddpm_is"


def test_baseline_needs_stochastic_kernels(zeros2):
    denoiser = GaussianPosteriorDenoiser(zeros2, 0.0)
    target = GmmTarget.gaussian(zeros2, 1.0)
    with pytest.raises(DegenerateProposalError):
        baseline_ddpm_is(denoiser, target, log_schedule(5, EPS, T_MAX), 0.0, 10, RandomStream(0))


def test_baseline_reproducible(two_mode_gmm):
    denoiser = AnalyticGmmDenoiser(two_mode_gmm)
    schedule = log_schedule(8, EPS, T_MAX)
    a = baseline_ddpm_is(denoiser, two_mode_gmm, schedule, 1.0, 64, RandomStream(5, 1))
    b = baseline_ddpm_is(denoiser, two_mode_gmm, schedule, 1.0, 64, RandomStream(5, 1))
    assert torch.equal(a.log_weights, b.log_weights)
    assert torch.equal(a.samples, b.samples)

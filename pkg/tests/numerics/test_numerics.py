import math

import pytest
import torch

from boltzbit.errors import CapabilityError, DomainError, ShapeError, TrainingError
from boltzbit.numerics import (
    AdamState,
    RandomStream,
    adam_step,
    check_grad,
    ema_update,
    gaussian_log_density,
    grad,
    log_sum_exp,
    value_and_grad,
)


def test_gaussian_log_density_standard():
    value = gaussian_log_density(torch.zeros(1), torch.zeros(1), 1.0)
    assert value.item() == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-12)


def test_gaussian_log_density_at_mean():
    mean = torch.tensor([1.0, -2.0, 0.5])
    value = gaussian_log_density(mean, mean, 3.0)
    assert value.item() == pytest.approx(-1.5 * math.log(2 * math.pi * 3.0), abs=1e-12)


def test_gaussian_log_density_sums_coordinates():
    x = torch.tensor([1.0, 2.0])
    joint = gaussian_log_density(x, torch.zeros(2), 2.0).item()
    separate = sum(gaussian_log_density(x[i : i + 1], torch.zeros(1), 2.0).item() for i in range(2))
    assert joint == pytest.approx(separate, abs=1e-12)


def test_gaussian_log_density_batched():
    x = torch.zeros(5, 3, dtype=torch.float64)
    assert gaussian_log_density(x, torch.zeros(3), 1.0).shape == (5,)


def test_gaussian_log_density_rejects_bad_variance():
    with pytest.raises(DomainError):
        gaussian_log_density(torch.zeros(2), torch.zeros(2), 0.0)


def test_gaussian_log_density_rejects_shape_mismatch():
    with pytest.raises(ShapeError):
        gaussian_log_density(torch.zeros(2), torch.zeros(3), 1.0)


def test_log_sum_exp():
    assert log_sum_exp([0.0, 0.0]).item() == pytest.approx(math.log(2), abs=1e-12)
    assert log_sum_exp([-3.5]).item() == -3.5
    assert log_sum_exp([1000.0, 1000.0]).item() == pytest.approx(1000 + math.log(2), abs=1e-9)


def test_log_sum_exp_matches_naive():
    values = RandomStream(3).normal(50)
    assert log_sum_exp(values).item() == pytest.approx(math.log(values.exp().sum().item()), abs=1e-12)


def test_log_sum_exp_empty():
    with pytest.raises(DomainError):
        log_sum_exp([])


def test_grad_square():
    g = grad(lambda p: (p * p).sum(), torch.tensor([3.0], dtype=torch.float64))
    assert g.item() == pytest.approx(6.0)


def test_grad_constant():
    g = grad(lambda p: torch.tensor(2.0, dtype=torch.float64), torch.ones(4, dtype=torch.float64))
    assert torch.equal(g, torch.zeros(4, dtype=torch.float64))


def test_value_and_grad():
    value, g = value_and_grad(lambda p: (p**3).sum(), torch.tensor([2.0], dtype=torch.float64))
    assert value.item() == pytest.approx(8.0)
    assert g.item() == pytest.approx(12.0)
    assert not value.requires_grad


def test_grad_needs_scalar():
    with pytest.raises(CapabilityError):
        grad(lambda p: p * 2, torch.ones(3, dtype=torch.float64))


def test_grad_rejects_non_finite():
    with pytest.raises(DomainError):
        grad(lambda p: p.sum(), torch.tensor([float("nan")], dtype=torch.float64))


def test_check_grad_smooth_function(rng):
    params = rng.normal(20)
    assert check_grad(lambda p: (p.sin() * p.exp()).sum(), params, rng) < 1e-6


def test_adam_zero_gradient():
    params = torch.tensor([1.0, -2.0], dtype=torch.float64)
    new, state = adam_step(params, torch.zeros(2, dtype=torch.float64), AdamState.zeros_like(params))
    assert torch.equal(new, params)
    assert state.step_count == 1


def test_adam_first_step():
    params = torch.tensor([1.0, -2.0], dtype=torch.float64)
    g = torch.tensor([0.5, -4.0], dtype=torch.float64)
    state = AdamState.zeros_like(params, learning_rate=0.1)
    new, _ = adam_step(params, g, state)
    expected = params - 0.1 * g / (g.abs() + state.eps_stability)
    assert torch.allclose(new, expected, atol=1e-12)


def test_adam_constant_gradient_sign():
    params = torch.zeros(2, dtype=torch.float64)
    g = torch.tensor([3.0, -0.01], dtype=torch.float64)
    state = AdamState.zeros_like(params, learning_rate=0.01)
    for _ in range(200):
        previous = params
        params, state = adam_step(params, g, state)
    assert torch.allclose(params - previous, -0.01 * g.sign(), atol=1e-6)
    assert state.step_count == 200


def test_adam_nan_gradient_reports_step():
    params = torch.zeros(1, dtype=torch.float64)
    state = AdamState.zeros_like(params)
    params, state = adam_step(params, torch.ones(1, dtype=torch.float64), state)
    with pytest.raises(TrainingError) as e:
        adam_step(params, torch.tensor([float("nan")], dtype=torch.float64), state)
    assert e.value.step == 2


def test_adam_shape_mismatch():
    params = torch.zeros(2, dtype=torch.float64)
    with pytest.raises(ShapeError):
        adam_step(params, torch.zeros(3, dtype=torch.float64), AdamState.zeros_like(params))


def test_ema_update():
    target = [torch.zeros(2, dtype=torch.float64)]
    ema_update(target, [torch.ones(2, dtype=torch.float64)], 0.9)
    assert torch.allclose(target[0], torch.full((2,), 0.1, dtype=torch.float64))


def test_random_stream_reproducible():
    a, b = RandomStream(7, 3), RandomStream(7, 3)
    assert torch.equal(a.normal(100), b.normal(100))
    assert torch.equal(a.uniform(10), b.uniform(10))
    assert a.counter == b.counter == 110


def test_random_stream_ids_differ():
    assert not torch.equal(RandomStream(7, 1).normal(100), RandomStream(7, 2).normal(100))


def test_random_stream_permutation():
    assert sorted(RandomStream(0).permutation(6).tolist()) == list(range(6))

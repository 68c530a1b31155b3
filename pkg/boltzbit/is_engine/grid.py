from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import torch

from boltzbit.errors import GridError
from boltzbit.numerics import as_tensor

# relative slack for the t_N = T and t_0^(prop) = eps checks
ENDPOINT_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Interleaved times of the alternating proposal/target.

    ``t`` holds t_0…t_N; ``t_tar`` and ``t_prop`` hold the N target and proposal times t_0…t_{N−1}.
    Tensors may carry gradients back to schedule parameters.
    """

    t: torch.Tensor
    t_tar: torch.Tensor
    t_prop: torch.Tensor

    @property
    def n_steps(self) -> int:
        return len(self.t) - 1

    def proposal_variances(self) -> torch.Tensor:
        """t_{n−1}² − (t_{n−1}^(prop))² for n = 1…N."""
        return self.t[:-1] ** 2 - self.t_prop**2

    def target_variances(self) -> torch.Tensor:
        """t_n² − (t_{n−1}^(tar))² for n = 1…N."""
        return self.t[1:] ** 2 - self.t_tar**2

    def validate(self, eps: float, t_max: float) -> TimeGrid:
        n = self.n_steps
        if n < 1 or self.t_tar.shape != (n,) or self.t_prop.shape != (n,):
            raise GridError(
                f"Inconsistent grid lengths, t={len(self.t)}, tar={len(self.t_tar)}, prop={len(self.t_prop)}"
            )
        t, tar, prop = (v.detach() for v in (self.t, self.t_tar, self.t_prop))
        if not bool(torch.isfinite(t).all() and torch.isfinite(tar).all() and torch.isfinite(prop).all()):
            raise GridError("Grid times must be finite")
        if not math.isclose(t[-1].item(), t_max, rel_tol=ENDPOINT_TOLERANCE):
            raise GridError(f"t_N must equal T, t_N={t[-1].item()}", index=n)
        if not math.isclose(prop[0].item(), eps, rel_tol=ENDPOINT_TOLERANCE):
            raise GridError(f"t_0^(prop) must equal eps, got {prop[0].item()}", index=0)
        for i in range(n):
            if not prop[i] < t[i] < t[i + 1]:
                raise GridError("Need t_prop[n-1] < t[n-1] < t[n]", index=i)
            if not t[i] <= tar[i] < t[i + 1]:
                raise GridError("Need t[n-1] <= t_tar[n-1] < t[n]", index=i)
        for i, (p, q) in enumerate(zip(self.proposal_variances().tolist(), self.target_variances().tolist())):
            if p <= 0 or q <= 0:
                raise GridError(f"Non-positive kernel variance, proposal={p}, target={q}", index=i)
        return self

    def detach(self) -> TimeGrid:
        return TimeGrid(self.t.detach(), self.t_tar.detach(), self.t_prop.detach())

    def grid_hash(self) -> str:
        digest = hashlib.sha256()
        for values in (self.t, self.t_tar, self.t_prop):
            digest.update(repr(values.detach().tolist()).encode("utf-8"))
        return digest.hexdigest()

    @classmethod
    def from_lists(cls, t, t_tar, t_prop) -> TimeGrid:
        return cls(as_tensor(t), as_tensor(t_tar), as_tensor(t_prop))


def gaussian_matched_grid(n: int, eps: float, t_max: float) -> TimeGrid:
    """A grid on which proposal and target joints coincide for a point-mass flow and a N(0, t_0²) target.

    t_1…t_N are log-spaced to T, t_0 = eps·(t_1/eps)^(1/4), t_0^(tar) = eps·t_1/t_0, later target times are
    interval midpoints and t_{n−1}^(prop) = t_{n−1}^(tar)·t_{n−1}/t_n.

    Every kernel here has proposal variance (t_{n−1}/t_n)² times the target variance, so the grid lies outside the
    variance-matched parameterization and tuning in that mode cannot reach ESS/K = 1 on this example. Free mode
    contains it.
    """
    if n < 1:
        raise GridError(f"Grid needs N >= 1, N={n}")
    upper = torch.exp(torch.linspace(math.log(eps), math.log(t_max), n + 1, dtype=torch.float64))[1:]
    upper[-1] = t_max
    t_1 = upper[0].item()
    t_0 = eps * (t_1 / eps) ** 0.25
    t = torch.cat([torch.tensor([t_0], dtype=torch.float64), upper])

    tar = 0.5 * (t[:-1] + t[1:])
    tar[0] = eps * t_1 / t_0
    prop = tar * t[:-1] / t[1:]
    prop[0] = eps
    return TimeGrid(t, tar, prop).validate(eps, t_max)

from __future__ import annotations

from enum import StrEnum

import torch

from boltzbit.errors import DomainError
from boltzbit.numerics import as_tensor


class TestFunction(StrEnum):
    __test__ = False

    LOG_L2_NORM = "log_l2_norm"
    LOG_L1_NORM = "log_l1_norm"
    COS_L2_NORM = "cos_l2_norm"


def eval_test_function(phi: TestFunction | str, x: torch.Tensor) -> torch.Tensor:
    """Evaluate phi on every row of ``x``."""
    phi = TestFunction(phi)
    x = as_tensor(x)
    match phi:
        case TestFunction.LOG_L2_NORM | TestFunction.LOG_L1_NORM:
            order = 2 if phi == TestFunction.LOG_L2_NORM else 1
            norm = torch.linalg.vector_norm(x, ord=order, dim=-1)
            if bool((norm == 0).any()):
                raise DomainError(f"{phi} is undefined at x=0")
            return torch.log(norm)
        case TestFunction.COS_L2_NORM:
            return torch.cos(torch.linalg.vector_norm(x, dim=-1))

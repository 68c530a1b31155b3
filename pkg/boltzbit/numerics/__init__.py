from .autodiff import check_grad, grad, parameter_function, value_and_grad  # noqa: F401
from .optim import AdamState, adam_step, ema_update  # noqa: F401
from .random import RandomStream  # noqa: F401
from .tensor import as_tensor, gaussian_log_density, log_sum_exp  # noqa: F401

from .export import coordinate_columns, write_csv  # noqa: F401
from .kernels import ddim_kernel, ddim_sigma, ddim_step, forward_noise  # noqa: F401
from .samplers import SampleBatch, ancestral_sample, cm_multistep_sample, prior_sample  # noqa: F401
from .schedule import Schedule, explicit_schedule, log_schedule, rho_schedule  # noqa: F401

from .distill import distill_bctm, distill_loss, sample_distill_times  # noqa: F401
from .dsm import dsm_loss, edm_loss_weight, sample_training_times, train_dsm  # noqa: F401
from .report import TrainReport  # noqa: F401
from .solver import SolverFlow, heun_integrate, heun_step  # noqa: F401

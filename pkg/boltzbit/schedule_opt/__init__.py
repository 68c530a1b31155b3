from .objective import forward_kl_objective, forward_kl_terms  # noqa: F401
from .params import ScheduleParams, build_time_grid  # noqa: F401
from .storage import grid_document, load_grid, save_grid  # noqa: F401
from .tuner import tune_grid  # noqa: F401

from .alternating import (  # noqa: F401
    bctm_is,
    proposal_log_density,
    proposal_rollout,
    target_log_density,
    target_rollout,
    target_traverse_count,
)
from .baseline import baseline_ddpm_is, forward_log_density  # noqa: F401
from .ensemble import WeightedEnsemble, ess, merge_ensembles, snis_estimate  # noqa: F401
from .grid import TimeGrid, gaussian_matched_grid  # noqa: F401

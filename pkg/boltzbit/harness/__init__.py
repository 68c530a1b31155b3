from .experiments import (  # noqa: F401
    alignment_score,
    draw_ensemble,
    load_context,
    run_alignment_study,
    run_ess_curve,
    run_integral_table,
)
from .manifest import write_manifest  # noqa: F401
from .verify import run_suite  # noqa: F401

from .metrics import ensemble_ess, network_evaluations, training_iterations  # noqa: F401

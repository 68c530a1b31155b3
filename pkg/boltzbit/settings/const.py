import os
from pathlib import Path

import torch

BOLTZBIT_ROOT_DIR = Path(__file__).resolve().parent.parent.parent
CURRENT_DIR = Path(os.getcwd())

DTYPE = torch.float64

# EDM conventions: variance-exploding diffusion, f=0, g=sqrt(2t)
EPS = 0.002
T_MAX = 80.0

LOGGING_DEFAULT = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {"simple": {"format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s"}},
    "handlers": {"console": {"class": "logging.StreamHandler", "formatter": "simple", "level": "DEBUG"}},
    "loggers": {
        "matplotlib": {"handlers": ["console"], "level": "WARNING", "propagate": False},
        "PIL": {"handlers": ["console"], "level": "WARNING", "propagate": False},
    },
    "root": {"level": "INFO", "handlers": ["console"]},
}

from .analytic import AnalyticGmmDenoiser, GaussianFlow, GaussianPosteriorDenoiser  # noqa: F401
from .backbones import EgnnBackbone, MlpBackbone  # noqa: F401
from .checkpoint import (  # noqa: F401
    Checkpoint,
    build_denoiser,
    build_trajectory_model,
    load_checkpoint,
    save_checkpoint,
    sha256_file,
)
from .networks import (  # noqa: F401
    Denoiser,
    TrajectoryModel,
    batch_times,
    denoise,
    edm_coefficients,
    score_from_denoiser,
    traverse,
)

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import semver
import torch

from boltzbit.errors import ConfigError
from boltzbit.schema.models import ArchitectureSpec
from boltzbit.settings import DTYPE, config
from boltzbit.targets import EuclideanSpace, Space, ZeroCogSpace

from .backbones import EgnnBackbone, MlpBackbone
from .networks import Denoiser, TrajectoryModel

logger = logging.getLogger(__name__)

FORMAT_VERSION = semver.Version(1, 0, 0)

ModelKind = Literal["denoiser", "trajectory"]


def _space(architecture: ArchitectureSpec) -> Space:
    if architecture.kind == "egnn":
        return ZeroCogSpace(architecture.n_particles, architecture.space_dim)  # type: ignore[arg-type]
    return EuclideanSpace(architecture.dim)


def _backbone(architecture: ArchitectureSpec, n_times: int) -> torch.nn.Module:
    if architecture.kind == "egnn":
        return EgnnBackbone(
            architecture.n_particles,  # type: ignore[arg-type]
            architecture.space_dim,  # type: ignore[arg-type]
            n_times,
            architecture.width,
            architecture.depth,
            architecture.activation,
            architecture.embedding_size,
        )
    return MlpBackbone(
        architecture.dim,
        n_times,
        architecture.width,
        architecture.depth,
        architecture.activation,
        architecture.embedding_size,
    )


def build_denoiser(architecture: ArchitectureSpec) -> Denoiser:
    model = Denoiser(
        _backbone(architecture, 1), _space(architecture), architecture.sigma_data, config.eps, config.t_max
    )
    model.architecture = architecture
    return model.to(DTYPE)


def build_trajectory_model(architecture: ArchitectureSpec) -> TrajectoryModel:
    model = TrajectoryModel(
        _backbone(architecture, 2), _space(architecture), architecture.sigma_data, config.eps, config.t_max
    )
    model.architecture = architecture
    return model.to(DTYPE)


@dataclass
class Checkpoint:
    model: Denoiser | TrajectoryModel
    architecture: ArchitectureSpec
    kind: ModelKind
    config_hash: str | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def sigma_data(self) -> float:
        return self.model.sigma_data


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as f:
        for block in iter(lambda: f.read(2**18), b""):
            digest.update(block)
    return digest.hexdigest()


def save_checkpoint(path: Path, checkpoint: Checkpoint) -> str:
    """Write the checkpoint container and return its SHA-256."""
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(
        {
            "format_version": str(FORMAT_VERSION),
            "kind": checkpoint.kind,
            "architecture": checkpoint.architecture.model_dump(mode="json"),
            "sigma_data": checkpoint.sigma_data,
            "eps": checkpoint.model.eps,
            "t_max": checkpoint.model.t_max,
            "config_hash": checkpoint.config_hash,
            "metadata": checkpoint.metadata,
            "state_dict": checkpoint.model.state_dict(),
        },
        path,
    )
    digest = sha256_file(path)
    logger.info(f"Saved checkpoint, path={path}, kind={checkpoint.kind}, sha256={digest[:12]}")
    return digest


def load_checkpoint(path: Path, kind: ModelKind | None = None) -> Checkpoint:
    if not path.exists():
        raise ConfigError(f"Checkpoint not found, path={path}")
    data = torch.load(path, weights_only=True)

    version = semver.Version.parse(data["format_version"])
    if version.major != FORMAT_VERSION.major:
        raise ConfigError(f"Checkpoint format {version} is incompatible with {FORMAT_VERSION}, path={path}")
    if kind is not None and data["kind"] != kind:
        raise ConfigError(f"Checkpoint holds a {data['kind']}, expected a {kind}, path={path}")

    architecture = ArchitectureSpec.model_validate(data["architecture"])
    architecture = architecture.model_copy(update={"sigma_data": data["sigma_data"]})
    model = build_denoiser(architecture) if data["kind"] == "denoiser" else build_trajectory_model(architecture)
    model.load_state_dict(data["state_dict"])
    model.eps, model.t_max = data["eps"], data["t_max"]
    return Checkpoint(model, architecture, data["kind"], data["config_hash"], data["metadata"])

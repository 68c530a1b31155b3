from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field, model_validator


class ArchitectureSpec(BaseModel):
    """Backbone description stored in every checkpoint."""

    kind: Literal["mlp", "egnn"] = "mlp"
    dim: int = Field(default=2, ge=1)  # ambient coordinates
    n_particles: int | None = None
    space_dim: int | None = None
    width: int = Field(default=256, ge=1)
    depth: int = Field(default=4, ge=1)
    activation: Literal["silu", "gelu", "tanh"] = "silu"
    embedding_size: int = Field(default=16, ge=0)  # sinusoidal frequencies per time input
    sigma_data: float = Field(default=1.0, gt=0)

    @model_validator(mode="after")
    def _check_particles(self):
        if self.kind == "egnn":
            if self.n_particles is None or self.space_dim is None:
                raise ValueError("egnn backbones need n_particles and space_dim")
            if self.n_particles * self.space_dim != self.dim:
                raise ValueError(f"n_particles * space_dim != dim, dim={self.dim}")
        return self

from __future__ import annotations

from typing import Annotated, Literal, Union

from pydantic import AfterValidator, BaseModel, Field, model_validator


class McmcConfig(BaseModel):
    step_size: float = Field(default=0.5, gt=0)
    burn_in: int = Field(default=2000, ge=0)
    thinning: int = Field(default=10, ge=1)
    chains: int = Field(default=64, ge=1)
    adapt_target: float = Field(default=0.4, gt=0, lt=1)
    adapt_window: int = Field(default=50, ge=1)
    init_scale: float = Field(default=0.1, ge=0)


class GaussianSpec(BaseModel):
    kind: Literal["gaussian"] = "gaussian"
    dim: int = Field(default=2, ge=1)
    mean: list[float] | None = None
    variance: float = Field(default=1.0, ge=0)

    @model_validator(mode="after")
    def _check_mean(self):
        if self.mean is not None and len(self.mean) != self.dim:
            raise ValueError(f"mean has {len(self.mean)} entries, dim={self.dim}")
        return self


class GmmSpec(BaseModel):
    kind: Literal["gmm"] = "gmm"
    dim: int = Field(default=2, ge=1)
    n_components: int = Field(default=40, ge=1)
    low: float = -40.0
    high: float = 40.0
    component_variance: float = Field(default=1.0, ge=0)
    seed: int = 0  # draws the component means when they are not given explicitly
    means: list[list[float]] | None = None
    weights: list[float] | None = None

    @model_validator(mode="after")
    def _check_components(self):
        if self.means is not None:
            if len(self.means) != self.n_components or any(len(m) != self.dim for m in self.means):
                raise ValueError("means must be n_components vectors of length dim")
        if self.weights is not None and len(self.weights) != self.n_components:
            raise ValueError("weights must have n_components entries")
        return self


class Dw4Spec(BaseModel):
    kind: Literal["dw4"] = "dw4"
    a: float = 0.0
    b: float = -4.0
    c: float = 0.9
    d0: float = 4.0
    tau: float = Field(default=1.0, gt=0)
    n_particles: int = 4
    space_dim: int = 2
    mcmc: McmcConfig = McmcConfig()
    reservoir_size: int = Field(default=100_000, ge=1)


TargetSpec = Annotated[Union[GaussianSpec, GmmSpec, Dw4Spec], Field(discriminator="kind")]


PRESETS: dict[str, BaseModel] = {
    "gaussian": GaussianSpec(),
    "gmm2": GmmSpec(n_components=2, means=[[-3.0, 0.0], [3.0, 0.0]]),
    "gmm40-2d": GmmSpec(dim=2),
    "gmm40-10d": GmmSpec(dim=10),
    "dw4": Dw4Spec(),
}


def resolve_preset(value):
    if isinstance(value, str):
        if value not in PRESETS:
            raise ValueError(f"unknown target preset {value!r}, known: {sorted(PRESETS)}")
        return PRESETS[value]
    return value


# a target document or the name of a preset
TargetField = Annotated[TargetSpec | str, AfterValidator(resolve_preset)]

import os
from pathlib import Path

from pydantic import BaseModel, Field
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
    YamlConfigSettingsSource,
)

from .const import BOLTZBIT_ROOT_DIR, CURRENT_DIR, EPS, LOGGING_DEFAULT, T_MAX


class PrometheusSettings(BaseModel):
    enable: bool = False


class MetricsSettings(BaseModel):
    prometheus: PrometheusSettings = PrometheusSettings()


class BoltzBitSettings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="BOLTZBIT_")

    eps: float = Field(default=EPS, gt=0)
    t_max: float = Field(default=T_MAX, gt=0)

    threads: int | None = None  # torch intra-op threads, None keeps torch's default

    output_dir: Path = CURRENT_DIR.joinpath("runs")

    progress: bool = True

    metrics: MetricsSettings = MetricsSettings()

    logging: dict = LOGGING_DEFAULT

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        settings_sources = [init_settings, env_settings]
        config_files = []

        if (path := os.getenv("BOLTZBIT_SETTINGS")) is not None:
            config_files.append(Path(path))

        config_files.extend(
            [
                CURRENT_DIR.joinpath("boltzbit.yaml"),
                BOLTZBIT_ROOT_DIR.joinpath("boltzbit.yaml"),
                Path("/etc/boltzbit.yaml"),
            ]
        )

        cls.config_file = None
        for config_file in config_files:
            if config_file.exists():
                settings_sources.append(
                    YamlConfigSettingsSource(settings_cls, config_file),
                )
                cls.config_file = config_file
                break
        return tuple(settings_sources)

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Sequence

import torch
from pydantic import BaseModel

from boltzbit import __version__
from boltzbit.models import sha256_file
from boltzbit.schema import config_hash
from boltzbit.settings import config

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def write_manifest(
    directory: Path,
    command: str,
    document: BaseModel | None = None,
    seeds: Sequence[int] = (),
    checkpoints: dict[str, Path | None] | None = None,
    outputs: Sequence[Path] = (),
) -> Path:
    """Record everything needed to rerun a command beside its outputs. Holds no timestamps."""
    manifest = {
        "command": command,
        "version": __version__,
        "torch": torch.__version__,
        "settings": {"eps": config.eps, "t_max": config.t_max, "threads": config.threads},
        "config": None if document is None else document.model_dump(mode="json"),
        "config_hash": None if document is None else config_hash(document),
        "seeds": list(seeds),
        "checkpoints": {
            name: {"path": str(path), "sha256": sha256_file(path)}
            for name, path in (checkpoints or {}).items()
            if path is not None and path.exists()
        },
        "outputs": sorted(_relative(path, directory) for path in outputs),
    }
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / MANIFEST_NAME
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    logger.info(f"Wrote run manifest, path={path}")
    return path


def _relative(path: Path, directory: Path) -> str:
    try:
        return str(path.resolve().relative_to(directory.resolve()))
    except ValueError:
        return str(path)

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import TypeVar

import yaml
from pydantic import BaseModel, ValidationError

from boltzbit.errors import ConfigError

Document = TypeVar("Document", bound=BaseModel)


def config_hash(document: BaseModel) -> str:
    """SHA-256 over the canonical JSON dump of a document."""
    canonical = json.dumps(document.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_document(path: Path, model: type[Document]) -> Document:
    if not path.exists():
        raise ConfigError(f"Config file not found, path={path}")
    try:
        return model.model_validate(yaml.safe_load(path.read_text()) or {})
    except (yaml.YAMLError, ValidationError) as e:
        raise ConfigError(f"Invalid config file, path={path}, error={e}") from e

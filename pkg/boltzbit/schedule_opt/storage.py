from __future__ import annotations

import logging
from pathlib import Path

from boltzbit.errors import ConfigError
from boltzbit.is_engine import TimeGrid
from boltzbit.schema import load_document
from boltzbit.schema.tuning import GridDocument

from .params import ScheduleParams, build_time_grid

logger = logging.getLogger(__name__)


def grid_document(params: ScheduleParams, eps: float, t_max: float) -> GridDocument:
    grid = build_time_grid(params, eps, t_max).detach()
    return GridDocument(
        n_steps=params.n_steps,
        eps=eps,
        t_max=t_max,
        mode=params.mode,
        design=params.design,
        raw_mu=params.raw_mu.detach().tolist(),
        raw_eta=params.raw_eta.detach().tolist(),
        raw_gamma=None if params.raw_gamma is None else params.raw_gamma.detach().tolist(),
        t=grid.t.tolist(),
        t_tar=grid.t_tar.tolist(),
        t_prop=grid.t_prop.tolist(),
        objective_trace=params.objective_trace,
        grid_hash=grid.grid_hash(),
    )


def save_grid(path: Path, params: ScheduleParams, eps: float, t_max: float) -> GridDocument:
    document = grid_document(params, eps, t_max)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(document.model_dump_json(indent=2))
    logger.info(f"Saved grid, path={path}, grid_hash={document.grid_hash[:12]}")
    return document


def load_grid(path: Path) -> tuple[ScheduleParams, TimeGrid]:
    """Read a tuned grid and rebuild it from its raw parameters; the stored times must hash identically."""
    document = load_document(path, GridDocument)
    params = ScheduleParams(
        document.raw_mu, document.raw_eta, document.raw_gamma, document.mode, document.design, document.objective_trace
    )
    grid = build_time_grid(params, document.eps, document.t_max).detach()
    stored = TimeGrid.from_lists(document.t, document.t_tar, document.t_prop)
    if stored.grid_hash() != document.grid_hash:
        raise ConfigError(f"Grid hash does not match the stored times, path={path}")
    if grid.grid_hash() != document.grid_hash:
        logger.warning(f"Rebuilt grid differs from the stored times, using stored times, path={path}")
        grid = stored.validate(document.eps, document.t_max)
    return params, grid

"""Panel forecasting with lag features, tree ensembles and neural baselines."""

import json

from ._core import (
    Panel,
    PanelcastError,
    __version__,
    compute_metrics,
    fit_cell,
    interpolate,
    lag_dimension,
    load_panel,
    render_config,
    supervised,
    synthetic_panel,
)
from ._core import run_grid as _run_grid

MODELS = ("svmreg", "bdtree", "lsboost", "nn", "lstm", "ermbag", "ermbag_plus")


def run_grid(config="", include_timings=True):
    """Runs the grid for `key = value` config text and returns the parsed report."""
    return json.loads(_run_grid(config, include_timings))


__all__ = [
    "MODELS",
    "Panel",
    "PanelcastError",
    "__version__",
    "compute_metrics",
    "fit_cell",
    "interpolate",
    "lag_dimension",
    "load_panel",
    "render_config",
    "run_grid",
    "supervised",
    "synthetic_panel",
]

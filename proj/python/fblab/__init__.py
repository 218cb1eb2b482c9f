"""Free-boundary lab: obstacle problems, constraint maps and geodesics around convex bodies."""

import json
import os

from ._core import (
    ConfigError,
    ConvergenceError,
    ConvexBody,
    Error,
    GeodesicPath,
    InvalidProblem,
    __version__,
    legendre,
    legendre_derivative,
    legendre_zeros,
    nearest_legendre_zero,
    radial_free_boundary_radius,
    radial_profile,
    run_json,
    shortest_path,
    shortest_path_disk,
)


def run(config, out, check=False):
    """Run an experiment config (dict, JSON text or path) into `out`.

    Returns (status, manifest dict). Status follows the CLI exit codes.
    """
    if isinstance(config, dict):
        text = json.dumps(config)
    elif isinstance(config, (str, os.PathLike)) and os.path.exists(config):
        with open(config) as f:
            text = f.read()
    else:
        text = str(config)
    status, manifest = run_json(text, os.fspath(out), check)
    with open(manifest) as f:
        return status, json.load(f)


__all__ = [
    "ConfigError",
    "ConvergenceError",
    "ConvexBody",
    "Error",
    "GeodesicPath",
    "InvalidProblem",
    "__version__",
    "legendre",
    "legendre_derivative",
    "legendre_zeros",
    "nearest_legendre_zero",
    "radial_free_boundary_radius",
    "radial_profile",
    "run",
    "run_json",
    "shortest_path",
    "shortest_path_disk",
]

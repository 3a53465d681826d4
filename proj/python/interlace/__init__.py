"""Random interlacements on Z^d: exact samplers, capacities and the planar renormalization cascade."""

import json as _json

from ._interlace import (
    CascadeOverflow,
    ConfigError,
    PotentialError,
    Sampler,
    WindowTooLarge,
    __version__,
    capacity,
    cascade,
    cascade_dump,
    commands,
    equilibrium_measure,
    floor_root,
    green,
    level_sequence,
    origin_proxy,
    seed_level,
)
from ._interlace import run_experiment as _run_experiment


def run(command, **config):
    """Run an experiment command. Keyword arguments use the config-file keys."""
    return _run_experiment(command, _json.dumps(config) if config else "")


__all__ = [
    "CascadeOverflow",
    "ConfigError",
    "PotentialError",
    "Sampler",
    "WindowTooLarge",
    "__version__",
    "capacity",
    "cascade",
    "cascade_dump",
    "commands",
    "equilibrium_measure",
    "floor_root",
    "green",
    "level_sequence",
    "origin_proxy",
    "run",
    "seed_level",
]

"""Runtime configuration"""

from os import getenv
from pathlib import Path
from typing import Any

import yaml

from errors import ConfigError


def get_output_dir() -> Path:
    return Path(getenv('TDCOLER_OUT', 'results'))


def get_workers() -> int:
    workers = int(getenv('TDCOLER_WORKERS', 1))
    if workers < 1:
        raise ConfigError(f'TDCOLER_WORKERS must be >= 1, got {workers}')
    return workers


def get_seed() -> int:
    return int(getenv('TDCOLER_SEED', 0))


def get_log_level() -> str:
    return getenv('TDCOLER_LOG_LEVEL', 'INFO').upper()


def load_yaml(path: str | Path) -> dict[str, Any]:
    """Read a YAML mapping (campaign plans, dataset sidecars)."""
    with open(path, encoding='utf-8') as f:
        raw = yaml.safe_load(f)
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError(f'{path} must contain a mapping at the top level')
    return raw

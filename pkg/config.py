import os
from dataclasses import fields, replace
from enum import Enum

from dotenv import load_dotenv

from exceptions import ConfigError
from models import FadingParams, PowerLimits, SchemeId, SolverConfig, SweepAxis, Tolerances

# Load environment variables from .env file
load_dotenv()

APP_VERSION = '1.0.0'


class Config:
    # Directory for results.csv, summary.csv, plot scripts and reports
    OUTPUT_DIR = os.environ.get('OUTPUT_DIR') or 'results'

    # Worker processes for the Monte Carlo sweep
    WORKERS = int(os.environ.get('SIM_WORKERS') or 1)

    LOG_LEVEL = os.environ.get('SIM_LOG_LEVEL') or 'INFO'

    # tqdm progress bars on the console
    PROGRESS = (os.environ.get('SIM_PROGRESS') or '1') not in ('0', 'false', 'no')


# ==================== SCENARIO FILES ====================

# Nested dataclass reached from ScenarioConfig for every leaf type
_SECTIONS = [
    ('fading', FadingParams),
    ('solver', SolverConfig),
    ('solver.limits', PowerLimits),
    ('solver.tol', Tolerances),
]


def field_paths(config):
    """Map every leaf field name to its dotted path inside ScenarioConfig"""
    paths = {}
    for f in fields(config):
        if f.name not in ('fading', 'solver'):
            paths[f.name] = f.name
    for section, cls in _SECTIONS:
        for f in fields(cls):
            if f.name not in ('limits', 'tol'):
                paths.setdefault(f.name, f"{section}.{f.name}")
    return paths


def _coerce(name, current, raw):
    if isinstance(raw, str):
        raw = raw.strip()
    try:
        if name == 'schemes':
            items = raw.split(',') if isinstance(raw, str) else raw
            return [SchemeId(item.strip()) if isinstance(item, str) else SchemeId(item) for item in items]
        if name == 'sweep_values':
            items = raw.split(',') if isinstance(raw, str) else raw
            return [float(item) for item in items]
        if name == 'sweep_axis':
            return SweepAxis(raw)
        if isinstance(current, Enum):
            return type(current)(raw)
        if isinstance(current, bool):
            if isinstance(raw, bool):
                return raw
            return str(raw).lower() in ('1', 'true', 'yes', 'on')
        if isinstance(current, int):
            return int(raw)
        if current is None or isinstance(current, float):
            return None if str(raw).lower() in ('', 'none') else float(raw)
        return str(raw)
    except ValueError as e:
        raise ConfigError(f"invalid value {raw!r} for {name}: {e}") from e


def _get(config, path):
    value = config
    for part in path.split('.'):
        value = getattr(value, part)
    return value


def _set(config, path, value):
    head, _, rest = path.partition('.')
    if not rest:
        return replace(config, **{head: value})
    return replace(config, **{head: _set(getattr(config, head), rest, value)})


def apply_overrides(config, overrides):
    """
    Copy of config with overrides applied

    Args:
        config: ScenarioConfig
        overrides: mapping of field name (snake_case or kebab-case) to value

    Raises:
        ConfigError: unknown key or unparsable value
    """
    paths = field_paths(config)
    for key, raw in overrides.items():
        name = key.strip().replace('-', '_')
        if name not in paths:
            raise ConfigError(f"unknown configuration key {key!r}")
        path = paths[name]
        config = _set(config, path, _coerce(name, _get(config, path), raw))
    return config


def load_scenario_file(path):
    """
    Parse a flat key=value file; blank lines and # comments are ignored

    Returns:
        dict of raw string values in file order
    """
    values = {}
    try:
        with open(path, encoding='utf-8') as f:
            for number, line in enumerate(f, 1):
                line = line.split('#', 1)[0].strip()
                if not line:
                    continue
                if '=' not in line:
                    raise ConfigError(f"{path}:{number}: expected key=value")
                key, value = line.split('=', 1)
                values[key.strip()] = value.strip()
    except OSError as e:
        raise ConfigError(f"cannot read configuration file {path}: {e}") from e
    return values

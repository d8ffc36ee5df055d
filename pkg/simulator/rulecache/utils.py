import logging
from pathlib import Path

import pandas as pd
from dotenv import dotenv_values

from .models import RuleCacheError

logger = logging.getLogger(__name__)

TRUE_VALUES = ('1', 'true', 'yes', 'on')
FALSE_VALUES = ('0', 'false', 'no', 'off')


class ConfigError(RuleCacheError):
    def __init__(self, field: str, message: str):
        super().__init__(f'{field}: {message}')
        self.field = field
        self.message = message


def read_config_file(path) -> dict[str, str]:
    """Return the raw ``key = value`` pairs of a config file.

    Same syntax as a .env file: one entry per line, ``#`` comments,
    optional spaces around ``=``.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f'config file not found: {path}')
    values = dotenv_values(path)
    raw = {}
    for key, val in values.items():
        if val is None:
            raise ConfigError(key, 'missing value')
        raw[key.strip().lower()] = val.strip()
    logger.debug(f'Read {len(raw)} keys from {path}')
    return raw


def parse_int(field: str, value) -> int:
    try:
        return int(str(value).strip())
    except (TypeError, ValueError):
        raise ConfigError(field, f'expected an integer, got {value!r}') from None


def parse_float(field: str, value) -> float:
    try:
        return float(str(value).strip())
    except (TypeError, ValueError):
        raise ConfigError(field, f'expected a number, got {value!r}') from None


def parse_bool(field: str, value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in TRUE_VALUES:
        return True
    if text in FALSE_VALUES:
        return False
    raise ConfigError(field, f'expected on/off, got {value!r}')


def parse_range(field: str, value, cast=float) -> tuple:
    """Parse ``low, high`` (also accepts ``low-high`` or a 2-tuple)."""
    if isinstance(value, (tuple, list)):
        parts = list(value)
    else:
        text = str(value).strip()
        parts = [p for p in text.replace(',', ' ').split()]
        if len(parts) == 1 and '-' in text.lstrip('-'):
            parts = text.split('-', 1)
    if len(parts) != 2:
        raise ConfigError(field, f'expected "low, high", got {value!r}')
    parse = parse_int if cast is int else parse_float
    low, high = (parse(field, p) for p in parts)
    return low, high


def parse_list(value) -> list[str]:
    return [p.strip() for p in str(value).replace(';', ',').split(',') if p.strip()]


def write_table(df: pd.DataFrame, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format='%.10g')
    logger.info(f'Wrote {len(df)} rows to {path}')
    return path

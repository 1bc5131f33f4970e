"""
===============================================================================
CONFIGURATION - UNIT ROOT TOOLKIT
===============================================================================
Loads defaults from config.yaml, then applies UNITROOT_* environment
overrides (a .env file is honoured through python-dotenv).

Lookup order for the YAML file:
  1. explicit path argument
  2. UNITROOT_CONFIG environment variable
  3. config.yaml in the working directory, then in the repository root
"""

import os
import json
import hashlib
import logging
from dataclasses import dataclass, asdict, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv

logger = logging.getLogger(__name__)

load_dotenv()

REPO_ROOT = Path(__file__).resolve().parent.parent

# Environment variable -> settings field
ENV_OVERRIDES = {
    'UNITROOT_SEED': 'master_seed',
    'UNITROOT_THREADS': 'threads',
    'UNITROOT_DF_REPS': 'df_null_reps',
    'UNITROOT_FETCH_ENDPOINT': 'fetch_endpoint',
    'UNITROOT_FETCH_TIMEOUT': 'fetch_timeout',
    'UNITROOT_CACHE_DIR': 'cache_dir',
    'UNITROOT_DATABASE_URL': 'database_url',
    'UNITROOT_LOGS_DIR': 'logs_dir',
}

OPERATIONAL_FIELDS = frozenset({'threads', 'fetch_timeout', 'cache_dir', 'database_url', 'logs_dir'})


@dataclass(frozen=True)
class Settings:
    """Resolved configuration; every randomness source flows from master_seed"""

    master_seed: int = 20240101
    threads: int = 0
    svd_alpha: float = 0.05
    svd_a: float = -1.0
    prior_odds: float = 1.0
    df_null_reps: int = 100000
    mc_reps: int = 2000
    pr_ge1_max_T: int = 200
    log_levels: bool = False
    fetch_endpoint: str = 'https://data-api.ecb.europa.eu/service/data/EXR'
    fetch_timeout: float = 30.0
    cache_dir: str = '.cache'
    database_url: str = ''
    logs_dir: str = 'logs'

    @property
    def resolved_database_url(self) -> str:
        if self.database_url:
            return self.database_url
        return f"sqlite:///{Path(self.cache_dir) / 'unitroot.db'}"

    def fingerprint(self) -> str:
        """
        SHA-256 of the canonical JSON rendering (the config hash). Fields that
        cannot change results (workers, paths, timeouts) are left out.
        """
        values = {k: v for k, v in asdict(self).items() if k not in OPERATIONAL_FIELDS}
        payload = json.dumps(values, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(payload.encode('utf-8')).hexdigest()

    def with_overrides(self, **overrides: Any) -> 'Settings':
        clean = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **clean)


def _find_config_file(path: Optional[str]) -> Optional[Path]:
    candidates = []
    if path:
        candidates.append(Path(path))
    env_path = os.getenv('UNITROOT_CONFIG')
    if env_path:
        candidates.append(Path(env_path))
    candidates += [Path('config.yaml'), REPO_ROOT / 'config.yaml']

    for candidate in candidates:
        if candidate.exists():
            return candidate

    if path or env_path:
        logger.warning(f"Config file not found: {path or env_path}, using defaults")
    return None


def _coerce(name: str, raw: Any) -> Any:
    """Cast a YAML/env value to the declared field type"""
    field_type = {f.name: f.type for f in fields(Settings)}[name]
    if field_type in (bool, 'bool'):
        if isinstance(raw, str):
            return raw.strip().lower() in ('1', 'true', 'yes', 'on')
        return bool(raw)
    if field_type in (int, 'int'):
        return int(raw)
    if field_type in (float, 'float'):
        return float(raw)
    return str(raw)


def load_settings(path: Optional[str] = None, **overrides: Any) -> Settings:
    """
    Build Settings from YAML defaults, environment overrides and keyword
    overrides (highest precedence; None values are ignored).
    """
    values: Dict[str, Any] = {}
    known = {f.name for f in fields(Settings)}

    config_file = _find_config_file(path)
    if config_file is not None:
        try:
            with open(config_file, 'r', encoding='utf-8') as handle:
                loaded = yaml.safe_load(handle) or {}
        except yaml.YAMLError as e:
            logger.error(f"Error parsing YAML config {config_file}: {e}")
            loaded = {}
        for key, raw in loaded.items():
            if key in known:
                values[key] = _coerce(key, raw)
            else:
                logger.warning(f"Ignoring unknown config key '{key}' in {config_file}")

    for env_name, key in ENV_OVERRIDES.items():
        raw = os.getenv(env_name)
        if raw is not None:
            values[key] = _coerce(key, raw)

    settings = Settings(**values)
    return settings.with_overrides(**overrides)


def resolve_workers(threads: int) -> int:
    """0 means one worker per CPU"""
    if threads < 0:
        raise ValueError(f"threads must be >= 0, got {threads}")
    return threads or (os.cpu_count() or 1)

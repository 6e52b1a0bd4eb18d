"""Config parser logic."""

import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml

# Get module logger
logger = logging.getLogger(__name__)

CONFIG_FILE = '.fluxknit.yaml'

SectionConfig = Dict[str, Any]  # Use Any since yaml can return various types
Config = Dict[str, SectionConfig]


def parse_config(path: Optional[Union[str, Path]] = None) -> Config:
    """Parse config from .fluxknit.yaml (or path) merged over defaults."""
    config: Config = {
        'chain': {
            'coupling_g': 1.0,
            'hbar': 1.0,
            'direction': 'ltr',
        },
        'qec': {
            'direction': 'ltr',
            'block': 1,
            'failure_threshold': 1e-6,
        },
        'tool': {
            'fluxknit': {
                'concurrency': 0,
            }
        }
    }

    config_path = Path(path) if path is not None else Path(CONFIG_FILE)
    try:
        with open(config_path, 'r') as f:
            logger.debug(f"Found {config_path}, loading...")
            file_config = yaml.safe_load(f)
            logger.debug(f"Config from {config_path}: {file_config}")
    except FileNotFoundError:
        if path is not None:
            raise ValueError(f"config file {config_path} not found")
        logger.debug(f"No {CONFIG_FILE} found, using defaults")
        return config  # No config file is fine
    except yaml.YAMLError as e:
        raise ValueError(f"cannot parse {config_path}: {e}")

    if file_config is None:
        return config
    if not isinstance(file_config, dict):
        raise ValueError(f"{config_path} must hold a mapping, got {type(file_config).__name__}")
    for section in ('chain', 'qec'):
        value = file_config.get(section)
        if isinstance(value, dict):
            config[section].update(value)
    tool = file_config.get('tool')
    if isinstance(tool, dict) and isinstance(tool.get('fluxknit'), dict):
        config['tool']['fluxknit'].update(tool['fluxknit'])
    return config

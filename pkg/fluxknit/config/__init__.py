"""Config module."""

import os
from typing import Dict, Optional

from .models import ChainDefaults, FluxknitConfig, QecSettings, ToolConfig

SEED_ENV = 'FLUXKNIT_SEED'


class Config(FluxknitConfig):
    """Validated configuration built from a parsed config dict."""
    def __init__(self, config: Dict[str, Dict[str, object]]):
        """Initialize with parsed config dict."""
        tool_section = config.get('tool', {})
        tool_config = tool_section.get('fluxknit', {})

        super().__init__(
            chain=ChainDefaults.model_validate(config.get('chain', {})),
            qec=QecSettings.model_validate(config.get('qec', {})),
            tool=ToolConfig.model_validate(tool_config),
        )

    def resolve_seed(self, option: Optional[int] = None) -> int:
        """--seed, then FLUXKNIT_SEED, then tool.fluxknit.seed, then 0."""
        if option is not None:
            return option
        env = os.environ.get(SEED_ENV, '').strip()
        if env:
            try:
                return int(env)
            except ValueError:
                raise ValueError(f"{SEED_ENV} must be an integer, got '{env}'")
        if self.tool.seed is not None:
            return self.tool.seed
        return 0


def default_config() -> Config:
    """Get default config without reading any file."""
    return Config({
        'chain': {},
        'qec': {},
        'tool': {
            'fluxknit': {
                'concurrency': 0
            }
        }
    })

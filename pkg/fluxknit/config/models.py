"""Pydantic models for config types."""

from typing import Optional

from pydantic import BaseModel, Field, field_validator

from ..typing import Direction


class ChainDefaults(BaseModel):
    """Defaults for chains built without an explicit coupling."""
    coupling_g: float = 1.0
    hbar: float = 1.0
    direction: Direction = 'ltr'  # Default one-way sweep direction

    @field_validator('coupling_g', 'hbar')
    @classmethod
    def _positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError(f"must be positive, got {value}")
        return value

    class Config:
        """Pydantic config."""
        extra = "allow"  # Allow extra fields


class QecSettings(BaseModel):
    """Phase-flip code settings."""
    direction: Direction = 'ltr'  # Sweep direction of the detection pass
    block: int = 1
    failure_threshold: float = 1e-6  # Fidelity loss that counts as a logical error
    # Monte Carlo witness state on the logical Bloch sphere
    witness_theta: Optional[float] = None
    witness_phi: Optional[float] = None

    class Config:
        """Pydantic config."""
        extra = "allow"  # Allow extra fields


class ToolConfig(BaseModel):
    """Tool configuration."""
    concurrency: int = 0  # Worker threads for Monte Carlo trials; 0 runs inline
    seed: Optional[int] = None

    class Config:
        """Pydantic config."""
        extra = "allow"  # Allow extra fields


class FluxknitConfig(BaseModel):
    """Full fluxknit configuration."""
    chain: ChainDefaults = Field(default_factory=ChainDefaults)
    qec: QecSettings = Field(default_factory=QecSettings)
    tool: ToolConfig = Field(default_factory=ToolConfig)

    class Config:
        """Pydantic config."""
        extra = "allow"  # Allow extra fields

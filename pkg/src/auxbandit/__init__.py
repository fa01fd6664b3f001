"""Multi-armed bandits that exploit auxiliary information arriving between decisions."""
from __future__ import annotations

from ._backend import BACKEND
from .arrivals import ArrivalKind, ArrivalSpec
from .core import ArrivalMatrix, ConfigError, DomainError, Family, PolicyState, ProblemInstance
from .policies import PolicyConfig, PolicyKind

__version__ = "0.1.0"

__all__ = [
    "ArrivalKind",
    "ArrivalMatrix",
    "ArrivalSpec",
    "BACKEND",
    "ConfigError",
    "DomainError",
    "Family",
    "PolicyConfig",
    "PolicyKind",
    "PolicyState",
    "ProblemInstance",
    "__version__",
]

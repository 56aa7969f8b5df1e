"""Equilibrium thresholds for majority voting between two antagonistic agent types."""

from ._backend import BACKEND
from .model import (
    AgentGroup,
    AgentType,
    Environment,
    GroupedProfile,
    Prior,
    SignalModel,
    Strategy,
    UtilityTable,
    build_environment,
    signal_from_pair,
)
from .threshold import Segment, ThresholdPoint, classify, theta, xi_star

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AgentGroup",
    "AgentType",
    "Environment",
    "GroupedProfile",
    "Prior",
    "Segment",
    "SignalModel",
    "Strategy",
    "ThresholdPoint",
    "UtilityTable",
    "build_environment",
    "classify",
    "signal_from_pair",
    "theta",
    "xi_star",
    "__version__",
]

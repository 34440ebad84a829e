"""Compile and certify open-system vibronic dynamics on trapped-ion mixed qudit-boson simulators."""

__version__ = "0.1.0"

from .errors import (
    CertificationError,
    ConfigError,
    InfeasibleError,
    OpenMQBError,
    PropagationError,
)
from .model import (
    ChannelKind,
    DissipationChannel,
    HardwareProfile,
    LVCModel,
    Mode,
    SimulationRequest,
)

__all__ = [
    "__version__",
    "CertificationError",
    "ChannelKind",
    "ConfigError",
    "DissipationChannel",
    "HardwareProfile",
    "InfeasibleError",
    "LVCModel",
    "Mode",
    "OpenMQBError",
    "PropagationError",
    "SimulationRequest",
]

"""qndsim: simulator and calibration pipeline for nondemolition detection
of itinerant microwave photons with a cavity-coupled artificial atom."""

from . import calibration, config, core, device, moments, protocol, readout
from .config import RunConfig, default_config, load_config
from .device import DeviceParams
from .protocol import ProtocolConfig

__version__ = "0.1.0"

__all__ = [
    "DeviceParams",
    "ProtocolConfig",
    "RunConfig",
    "calibration",
    "config",
    "core",
    "default_config",
    "device",
    "load_config",
    "moments",
    "protocol",
    "readout",
]

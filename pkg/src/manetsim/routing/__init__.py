"""Routing protocols behind one per-node interface."""

from .aodv import Aodv
from .base import RoutingProtocol, SendBuffer
from .dsdv import Dsdv
from .dsr import Dsr
from .tora import ToraLite

PROTOCOLS = {
    "AODV": Aodv,
    "DSR": Dsr,
    "DSDV": Dsdv,
    "TORA": ToraLite,
}

# numeric codes used where the trace needs a protocol in an integer column
PROTOCOL_CODES = {"AODV": 0, "DSR": 1, "DSDV": 2, "TORA": 3}
CODE_PROTOCOLS = {v: k for k, v in PROTOCOL_CODES.items()}

__all__ = [
    "Aodv", "Dsr", "Dsdv", "ToraLite", "RoutingProtocol", "SendBuffer",
    "PROTOCOLS", "PROTOCOL_CODES", "CODE_PROTOCOLS",
]

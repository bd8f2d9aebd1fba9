from .params import HEAD_ARITIES, NetSizes, NetworkParams
from .policy import PolicyNetwork, PolicyOutput

__all__ = [
    "HEAD_ARITIES",
    "NetSizes",
    "NetworkParams",
    "PolicyNetwork",
    "PolicyOutput",
]

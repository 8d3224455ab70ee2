"""Reference gradient provider speaking the attack engine's wire protocol."""

from .model import HostedModel, ModelError, load_hosted_model
from .server import PROTOCOL_VERSION, ProviderSession, serve_stdio, serve_tcp

__version__ = "0.1.0"

__all__ = [
    "HostedModel",
    "ModelError",
    "PROTOCOL_VERSION",
    "ProviderSession",
    "load_hosted_model",
    "serve_stdio",
    "serve_tcp",
]

"""Reference server side of the PGD1 external-denoiser wire protocol."""

__version__ = "0.1.0"

from .denoisers import echo, gaussian_blur, load_plugin
from .frame import FrameError, Request, read_request, write_reply
from .server import ServerConfig, main, serve

__all__ = [
    "FrameError",
    "Request",
    "ServerConfig",
    "echo",
    "gaussian_blur",
    "load_plugin",
    "main",
    "read_request",
    "serve",
    "write_reply",
]

"""Ping-pong protocol simulation under lossless and lossy eavesdropping attacks."""

from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]

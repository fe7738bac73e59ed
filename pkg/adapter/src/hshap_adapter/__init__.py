"""Reference model server for the hshap stdio bridge protocol.

Wraps any Python callable that scores image batches as a line-oriented
JSON server: handshake first, then one response frame per request frame.
Standard output carries protocol frames only; logs go to standard error.
"""

from .server import AdapterConfig, serve

__version__ = "0.1.0"

__all__ = ["AdapterConfig", "serve", "__version__"]

"""phem-sidecar: HTTP inference service for text embeddings and fill-mask top-k."""

from .app import ModelState, create_app
from .config import ServiceConfig

__version__ = "0.1.0"

__all__ = ["create_app", "ModelState", "ServiceConfig", "__version__"]

from .app import create_app
from .config import AppConfig, Runtime, build_gateway, build_runtime
from .pipeline import Pipeline
from .seeding import seed_directory, seed_store
from .storage import Store

__all__ = [
    "AppConfig",
    "Pipeline",
    "Runtime",
    "Store",
    "build_gateway",
    "build_runtime",
    "create_app",
    "seed_directory",
    "seed_store",
]

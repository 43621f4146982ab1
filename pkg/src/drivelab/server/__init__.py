from drivelab.server.accounts import AccountStore
from drivelab.server.api import build_router, serve
from drivelab.server.service import IngestionService, ServiceError
from drivelab.server.storage import ChunkVault, TamperedError

__all__ = [
    "AccountStore",
    "ChunkVault",
    "IngestionService",
    "ServiceError",
    "TamperedError",
    "build_router",
    "serve",
]

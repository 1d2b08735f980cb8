"""
Archive storage backends for mlrank
"""

from .base_store import ArchiveStore, archive_key
from .json_store import JsonArchiveStore
from .sqlite_store import SQLiteArchiveStore
from .store_factory import ArchiveStoreFactory

__all__ = ["ArchiveStore", "ArchiveStoreFactory", "JsonArchiveStore", "SQLiteArchiveStore", "archive_key"]

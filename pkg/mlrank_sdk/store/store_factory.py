import os
from typing import List, Optional

from .base_store import ArchiveStore
from .json_store import JsonArchiveStore
from .sqlite_store import SQLiteArchiveStore


class ArchiveStoreFactory:
    """Factory class for creating archive stores."""

    @staticmethod
    def create_store(store_type: Optional[str] = None, **kwargs) -> ArchiveStore:
        """
        Create a store instance based on the specified type.

        Args:
            store_type: Type of store to create ('json', 'sqlite', or None for default)
            **kwargs: Additional arguments to pass to the store constructor

        Returns:
            ArchiveStore: Instance of the specified store type

        Raises:
            ValueError: If store_type is not supported
        """
        if store_type is None:
            store_type = "json"

        store_type = store_type.lower()

        if store_type == "json":
            return JsonArchiveStore(**kwargs)
        elif store_type == "sqlite":
            return SQLiteArchiveStore(**kwargs)
        else:
            raise ValueError(f"Unsupported store type: {store_type}. "
                             f"Supported types: {', '.join(ArchiveStoreFactory.get_available_stores())}")

    @staticmethod
    def get_available_stores() -> List[str]:
        """
        Get list of available store types.

        Returns:
            List of available store type names
        """
        return ["json", "sqlite"]

    @staticmethod
    def create_store_from_env() -> ArchiveStore:
        """
        Create a store instance based on environment variables.

        Environment variables:
        - MLRANK_STORE_TYPE: Type of store ('json' or 'sqlite')
        - MLRANK_ARCHIVE_DIR: Directory for the json store
        - MLRANK_DB_PATH: Database file for the sqlite store

        Returns:
            ArchiveStore: Instance of the configured store type
        """
        store_type = os.getenv("MLRANK_STORE_TYPE", "json").lower()
        if store_type == "sqlite":
            db_path = os.getenv("MLRANK_DB_PATH", "mlrank_archives.db")
            return ArchiveStoreFactory.create_store(store_type, db_path=db_path)
        return ArchiveStoreFactory.create_store(store_type, archive_dir=os.getenv("MLRANK_ARCHIVE_DIR", "archives"))

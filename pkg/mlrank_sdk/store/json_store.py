"""
JSON file storage backend for mlrank

One archive file per key inside a directory.
"""

import logging
import os
from pathlib import Path
from typing import List, Optional

from ..models import SolutionArchive
from ..monodromy import load_archive, save_archive
from .base_store import ArchiveStore

logger = logging.getLogger(__name__)


class JsonArchiveStore(ArchiveStore):
    """Directory of <key>.json archive documents"""

    def __init__(self, archive_dir: str = "archives"):
        """
        Initialize JSON store

        Args:
            archive_dir: directory holding the archive files
        """
        self.archive_dir = Path(archive_dir)
        self.archive_dir.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        if not key or os.sep in key or key.startswith("."):
            raise ValueError(f"Invalid archive key: {key!r}")
        return self.archive_dir / f"{key}.json"

    def save_archive(self, archive: SolutionArchive, key: str) -> bool:
        try:
            save_archive(archive, str(self._path(key)))
            return True
        except (OSError, ValueError) as e:
            logger.error("Error saving archive %s: %s", key, e)
            return False

    def load_archive(self, key: str) -> Optional[SolutionArchive]:
        path = self._path(key)
        if not path.exists():
            return None
        return load_archive(str(path))

    def list_archives(self) -> List[str]:
        return sorted(path.stem for path in self.archive_dir.glob("*.json"))

    def delete_archive(self, key: str) -> bool:
        path = self._path(key)
        try:
            path.unlink()
            return True
        except FileNotFoundError:
            return False
        except OSError as e:
            logger.error("Error deleting archive %s: %s", key, e)
            return False

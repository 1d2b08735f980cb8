"""
Base store interface for mlrank

Defines the contract that all archive storage backends must implement.
"""

from abc import ABC, abstractmethod
from typing import List, Optional

from ..models import RankModel, SolutionArchive


def archive_key(model: RankModel, seed: int) -> str:
    """Default key for the archive of a model built from a master seed"""
    suffix = "_sym" if model.symmetric else ""
    return f"m{model.m}_n{model.n}_r{model.r}{suffix}_seed{seed}"


class ArchiveStore(ABC):
    """Abstract base class for solution-archive storage backends"""

    @abstractmethod
    def save_archive(self, archive: SolutionArchive, key: str) -> bool:
        """
        Save an archive under a key, replacing any previous one

        Args:
            archive: SolutionArchive to save
            key: storage key

        Returns:
            True if successful, False otherwise
        """
        pass

    @abstractmethod
    def load_archive(self, key: str) -> Optional[SolutionArchive]:
        """
        Retrieve an archive by key

        Args:
            key: storage key

        Returns:
            SolutionArchive if found, None otherwise

        Raises:
            SchemaMismatch: stored document has the wrong version or layout
            CorruptArchive: stored checksum does not match
        """
        pass

    @abstractmethod
    def list_archives(self) -> List[str]:
        """
        List stored keys

        Returns:
            Sorted list of keys
        """
        pass

    @abstractmethod
    def delete_archive(self, key: str) -> bool:
        """
        Delete an archive by key

        Args:
            key: storage key

        Returns:
            True if something was deleted, False otherwise
        """
        pass

"""
SQLite storage backend for mlrank

Provides persistent archive storage using a SQLite database.
"""

import json
import logging
import sqlite3
from typing import List, Optional

from ..models import SolutionArchive
from ..monodromy import ARCHIVE_VERSION, archive_from_document, archive_to_document
from .base_store import ArchiveStore

logger = logging.getLogger(__name__)


class SQLiteArchiveStore(ArchiveStore):
    """SQLite-based storage backend for solution archives"""

    def __init__(self, db_path: str = "mlrank_archives.db"):
        """
        Initialize SQLite store

        Args:
            db_path: Path to SQLite database file
        """
        self.db_path = db_path
        self._init_database()

    def _init_database(self):
        """Initialize database tables"""
        with sqlite3.connect(self.db_path) as conn:
            conn.execute("""
                CREATE TABLE IF NOT EXISTS archives (
                    key TEXT PRIMARY KEY,
                    version INTEGER NOT NULL,
                    model TEXT NOT NULL,
                    u0 TEXT NOT NULL,
                    solutions TEXT NOT NULL,
                    ml_degree INTEGER NOT NULL,
                    trace_test TEXT NOT NULL,
                    seed INTEGER NOT NULL,
                    tolerances TEXT,
                    created_at TEXT NOT NULL,
                    sha256 TEXT NOT NULL
                )
            """)
            conn.execute("CREATE INDEX IF NOT EXISTS idx_created_at ON archives(created_at)")

    def save_archive(self, archive: SolutionArchive, key: str) -> bool:
        try:
            document = archive_to_document(archive)
            with sqlite3.connect(self.db_path) as conn:
                conn.execute("""
                    INSERT OR REPLACE INTO archives
                    (key, version, model, u0, solutions, ml_degree, trace_test, seed, tolerances, created_at, sha256)
                    VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
                """, (
                    key,
                    document["version"],
                    json.dumps(document["model"]),
                    json.dumps(document["u0"]),
                    json.dumps(document["solutions"]),
                    document["ml_degree"],
                    json.dumps(document["trace_test"]),
                    document["seed"],
                    json.dumps(document["tolerances"]),
                    document["created_at"],
                    document["sha256"],
                ))
            logger.info("Saved archive %s to %s", key, self.db_path)
            return True
        except (sqlite3.Error, ValueError) as e:
            logger.error("Error saving archive %s: %s", key, e)
            return False

    def load_archive(self, key: str) -> Optional[SolutionArchive]:
        with sqlite3.connect(self.db_path) as conn:
            cursor = conn.execute("""
                SELECT version, model, u0, solutions, ml_degree, trace_test, seed, tolerances, created_at, sha256
                FROM archives WHERE key = ?
            """, (key,))
            row = cursor.fetchone()
        if row is None:
            return None
        return archive_from_document(self._row_to_document(row))

    def _row_to_document(self, row) -> dict:
        """Convert a database row back into an archive document"""
        version, model, u0, solutions, ml_degree, trace_test, seed, tolerances, created_at, sha256 = row
        return {
            "version": version,
            "model": json.loads(model),
            "u0": json.loads(u0),
            "solutions": json.loads(solutions),
            "ml_degree": ml_degree,
            "trace_test": json.loads(trace_test),
            "seed": seed,
            "tolerances": json.loads(tolerances) if tolerances else {},
            "created_at": created_at,
            "sha256": sha256,
        }

    def list_archives(self) -> List[str]:
        with sqlite3.connect(self.db_path) as conn:
            cursor = conn.execute("SELECT key FROM archives WHERE version = ? ORDER BY key", (ARCHIVE_VERSION,))
            return [row[0] for row in cursor.fetchall()]

    def delete_archive(self, key: str) -> bool:
        try:
            with sqlite3.connect(self.db_path) as conn:
                cursor = conn.execute("DELETE FROM archives WHERE key = ?", (key,))
                return cursor.rowcount > 0
        except sqlite3.Error as e:
            logger.error("Error deleting archive %s: %s", key, e)
            return False

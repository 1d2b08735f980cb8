"""
Tests for archive stores, the store factory and settings
"""

import sqlite3

import numpy as np
import pytest

from mlrank_sdk.config import SolverSettings
from mlrank_sdk.exceptions import CorruptArchive
from mlrank_sdk.models import RankModel
from mlrank_sdk.store import ArchiveStoreFactory, JsonArchiveStore, SQLiteArchiveStore, archive_key


def assert_same_archive(loaded, original):
    assert loaded.model == original.model
    assert loaded.checksum == original.checksum
    assert loaded.ml_degree == original.ml_degree
    assert all(np.array_equal(x, y) for x, y in zip(loaded.solutions, original.solutions))


class TestArchiveKey:
    """Test default archive keys"""

    def test_general(self):
        assert archive_key(RankModel(3, 3, 2), 0) == "m3_n3_r2_seed0"

    def test_symmetric(self):
        assert archive_key(RankModel(4, 4, 2, True), 7) == "m4_n4_r2_sym_seed7"


class TestJsonArchiveStore:
    """Test the directory-of-files backend"""

    def setup_method(self):
        self.key = archive_key(RankModel(3, 3, 1), 0)

    def test_save_and_load(self, archive_331, tmp_path):
        store = JsonArchiveStore(str(tmp_path / "archives"))

        assert store.save_archive(archive_331, self.key)
        assert_same_archive(store.load_archive(self.key), archive_331)

    def test_missing_key(self, tmp_path):
        assert JsonArchiveStore(str(tmp_path)).load_archive("m3_n3_r2_seed9") is None

    def test_list_and_delete(self, archive_331, tmp_path):
        store = JsonArchiveStore(str(tmp_path))
        store.save_archive(archive_331, self.key)
        store.save_archive(archive_331, "copy")

        assert store.list_archives() == ["copy", self.key]
        assert store.delete_archive("copy")
        assert not store.delete_archive("copy")
        assert store.list_archives() == [self.key]

    def test_invalid_key(self, tmp_path):
        store = JsonArchiveStore(str(tmp_path))

        with pytest.raises(ValueError):
            store.load_archive("../escape")

    def test_corrupt_file(self, archive_331, tmp_path):
        store = JsonArchiveStore(str(tmp_path))
        store.save_archive(archive_331, self.key)
        path = tmp_path / f"{self.key}.json"
        path.write_text(path.read_text().replace('"ml_degree": 1', '"ml_degree": 2'))

        with pytest.raises(CorruptArchive):
            store.load_archive(self.key)


class TestSQLiteArchiveStore:
    """Test the SQLite backend"""

    def setup_method(self):
        self.key = archive_key(RankModel(3, 3, 1), 0)

    def test_save_and_load(self, archive_331, tmp_path):
        store = SQLiteArchiveStore(str(tmp_path / "archives.db"))

        assert store.save_archive(archive_331, self.key)
        assert_same_archive(store.load_archive(self.key), archive_331)

    def test_replace(self, archive_331, tmp_path):
        store = SQLiteArchiveStore(str(tmp_path / "archives.db"))
        store.save_archive(archive_331, self.key)
        store.save_archive(archive_331, self.key)

        assert store.list_archives() == [self.key]

    def test_missing_and_delete(self, archive_331, tmp_path):
        store = SQLiteArchiveStore(str(tmp_path / "archives.db"))

        assert store.load_archive(self.key) is None
        assert not store.delete_archive(self.key)
        store.save_archive(archive_331, self.key)
        assert store.delete_archive(self.key)
        assert store.list_archives() == []

    def test_tampered_row(self, archive_331, tmp_path):
        db_path = str(tmp_path / "archives.db")
        store = SQLiteArchiveStore(db_path)
        store.save_archive(archive_331, self.key)
        with sqlite3.connect(db_path) as conn:
            conn.execute("UPDATE archives SET sha256 = ? WHERE key = ?", ("0" * 64, self.key))

        with pytest.raises(CorruptArchive):
            store.load_archive(self.key)


class TestArchiveStoreFactory:
    """Test store selection"""

    def test_available(self):
        assert ArchiveStoreFactory.get_available_stores() == ["json", "sqlite"]

    def test_create(self, tmp_path):
        assert isinstance(ArchiveStoreFactory.create_store("json", archive_dir=str(tmp_path)), JsonArchiveStore)
        assert isinstance(ArchiveStoreFactory.create_store("SQLite", db_path=str(tmp_path / "a.db")),
                          SQLiteArchiveStore)

    def test_unsupported(self):
        with pytest.raises(ValueError):
            ArchiveStoreFactory.create_store("redis")

    def test_from_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("MLRANK_STORE_TYPE", "sqlite")
        monkeypatch.setenv("MLRANK_DB_PATH", str(tmp_path / "env.db"))

        store = ArchiveStoreFactory.create_store_from_env()

        assert isinstance(store, SQLiteArchiveStore)
        assert (tmp_path / "env.db").exists()


class TestSolverSettings:
    """Test environment-driven defaults"""

    def test_from_env(self, monkeypatch):
        monkeypatch.setenv("MLRANK_THREADS", "3")
        monkeypatch.setenv("MLRANK_SEED", "42")
        monkeypatch.setenv("MLRANK_LOG_LEVEL", "info")

        settings = SolverSettings.from_env()

        assert settings.threads == 3
        assert settings.seed == 42
        assert settings.log_level == "INFO"

    def test_bad_integer(self, monkeypatch):
        monkeypatch.setenv("MLRANK_SEED", "abc")

        with pytest.raises(ValueError):
            SolverSettings.from_env()

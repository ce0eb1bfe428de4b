"""测试编译产物缓存与缓存键"""
import time
from unittest.mock import patch

import pytest

from cache import Cache
from cache_keys import get_embedding_key, get_search_key


@pytest.fixture
def temp_cache(tmp_path):
    """创建临时缓存实例"""
    return Cache(str(tmp_path / "test_cache.db"))


def test_basic_operations(temp_cache):
    """写入并读取一条嵌入结果；覆盖写以最后一次为准"""
    coords = {"strategy": "mirror", "coords": [[0, 0], [-1, 0], [1, 0]]}
    temp_cache.set("embedding:abc", coords)
    assert temp_cache.get("embedding:abc") == coords
    assert temp_cache.get("embedding:missing") is None

    temp_cache.set("embedding:abc", {"strategy": "trivial"})
    assert temp_cache.get("embedding:abc") == {"strategy": "trivial"}


def test_expiration(temp_cache):
    """过期后读不到"""
    temp_cache.set("search:short", [1, 2, 3], expire_in=1)
    assert temp_cache.get("search:short") == [1, 2, 3]
    time.sleep(1.1)
    assert temp_cache.get("search:short") is None


def test_tuples_come_back_as_lists(temp_cache):
    """值按 JSON 规整，命中前后形状一致"""
    temp_cache.set("k", {"coords": [(0, 1), (1, 1)]})
    assert temp_cache.get("k") == {"coords": [[0, 1], [1, 1]]}


def test_get_or_compute(temp_cache):
    """未命中调用工厂函数，命中后不再调用"""
    calls = []

    def factory():
        calls.append(1)
        return [3, 1, 2]

    assert temp_cache.get_or_compute("search:x", factory) == [3, 1, 2]
    assert temp_cache.get_or_compute("search:x", factory) == [3, 1, 2]
    assert len(calls) == 1
    assert (temp_cache.hits, temp_cache.misses) == (1, 1)


def test_memory_limit(tmp_path):
    """内存层只保留最新的条目，其余仍可从 SQLite 读回"""
    cache = Cache(str(tmp_path / "limit_test.db"), max_memory_items=2)
    for key, value in [("a", 1), ("b", 2), ("c", 3)]:
        cache.set(key, value)

    keys = set(cache._memory_cache.keys())
    assert keys == {"b", "c"}
    assert [cache.get(k) for k in "abc"] == [1, 2, 3]


def test_persistence(tmp_path):
    """新实例能读到旧实例写入的值"""
    db_path = tmp_path / "persist_test.db"
    Cache(str(db_path)).set("embedding:persist", {"strategy": "trivial"})
    assert Cache(str(db_path)).get("embedding:persist") == {"strategy": "trivial"}


# ---------- 缓存键 ----------
def test_embedding_key_is_stable():
    """相同参数得到相同的键；算法版本或参数变化则不同"""
    key = get_embedding_key(2, 4, 1000)
    assert key.startswith("embedding:")
    assert key == get_embedding_key(2, 4, 1000)
    assert key != get_embedding_key(2, 5, 1000)
    assert key != get_embedding_key(2, 4, 500)
    with patch("cache_keys.EMBED_ALGORITHM_VERSION", "other"):
        assert key != get_embedding_key(2, 4, 1000)


def test_search_key_depends_on_seed_and_graph():
    key = get_search_key(3, [1, 2, 3], [[1, 2]], 100, 0)
    assert key.startswith("search:")
    assert key != get_search_key(3, [1, 2, 3], [[1, 2]], 100, 1)
    assert key != get_search_key(3, [1, 2, 3], [[2, 3]], 100, 0)
    with patch("cache_keys.SEARCH_ALGORITHM_VERSION", "other"):
        assert key != get_search_key(3, [1, 2, 3], [[1, 2]], 100, 0)

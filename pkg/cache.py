"""
编译产物缓存：内存 + SQLite 两级，保存格点嵌入与局部搜索结果
"""
import json
import logging
import sqlite3
import time
from collections import OrderedDict
from contextlib import closing, contextmanager
from pathlib import Path
from typing import Any, Callable, Iterator, Optional

logger = logging.getLogger(__name__)

_SCHEMA = """
CREATE TABLE IF NOT EXISTS artefacts (
    key TEXT PRIMARY KEY,
    kind TEXT NOT NULL,
    value TEXT NOT NULL,
    expire_time REAL NOT NULL
)
"""


def _normalize(value: Any) -> Any:
    """按 JSON 规整（元组变列表、键排序），命中与否返回同一形状"""
    return json.loads(json.dumps(value, sort_keys=True))


def _kind_of(key: str) -> str:
    # embedding:<hash> / search:<hash>
    return key.split(":", 1)[0] if ":" in key else "misc"


class Cache:
    """
    编译产物的 JSON 缓存

    - 内存层是 OrderedDict，超出上限时淘汰最早写入的条目
    - SQLite 层按 kind（键前缀）记录产物类型，过期行定期清理
    - get_or_compute 统计 hits / misses，供 CLI 汇报
    """

    def __init__(
        self,
        db_path: str = ".cache/cache.db",
        max_memory_items: int = 1000,
        cleanup_interval: int = 3600,
    ):
        self._memory_cache: OrderedDict[str, tuple[Any, float]] = OrderedDict()
        self._max_memory_items = max_memory_items
        self._cleanup_interval = cleanup_interval
        self._last_cleanup = time.time()
        self.hits = 0
        self.misses = 0

        path = Path(db_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self._db_path = str(path)
        with self._connect() as conn:
            conn.execute(_SCHEMA)

    @contextmanager
    def _connect(self) -> Iterator[sqlite3.Connection]:
        """连接在退出时提交并关闭"""
        with closing(sqlite3.connect(self._db_path)) as conn:
            with conn:
                yield conn

    def _remember(self, key: str, value: Any, expire_time: float) -> None:
        self._memory_cache[key] = (value, expire_time)
        self._memory_cache.move_to_end(key)
        while len(self._memory_cache) > self._max_memory_items:
            self._memory_cache.popitem(last=False)

    def _load(self, key: str, now: float) -> Optional[tuple[Any, float]]:
        with self._connect() as conn:
            row = conn.execute(
                "SELECT value, expire_time FROM artefacts WHERE key = ? AND expire_time > ?",
                (key, now),
            ).fetchone()
        if row is None:
            return None
        return json.loads(row[0]), row[1]

    def _purge_expired(self, now: float) -> None:
        if now - self._last_cleanup < self._cleanup_interval:
            return
        stale = [k for k, (_, exp) in self._memory_cache.items() if exp <= now]
        for k in stale:
            del self._memory_cache[k]
        with self._connect() as conn:
            removed = conn.execute("DELETE FROM artefacts WHERE expire_time <= ?", (now,)).rowcount
        self._last_cleanup = now
        if removed:
            logger.debug("Purged %d expired artefacts", removed)

    def get(self, key: str) -> Optional[Any]:
        """读取缓存值，不存在或已过期返回 None"""
        now = time.time()
        self._purge_expired(now)

        entry = self._memory_cache.get(key)
        if entry is not None:
            if entry[1] > now:
                return entry[0]
            del self._memory_cache[key]

        loaded = self._load(key, now)
        if loaded is None:
            return None
        self._remember(key, *loaded)
        return loaded[0]

    def set(self, key: str, value: Any, expire_in: int = 86400) -> None:
        """
        写入缓存值

        Args:
            key: 缓存键（见 cache_keys）
            value: 可 JSON 序列化的编译产物
            expire_in: 过期时间（秒）
        """
        expire_time = time.time() + expire_in
        payload = json.dumps(value, sort_keys=True)
        self._remember(key, json.loads(payload), expire_time)
        with self._connect() as conn:
            conn.execute(
                "INSERT OR REPLACE INTO artefacts (key, kind, value, expire_time) VALUES (?, ?, ?, ?)",
                (key, _kind_of(key), payload, expire_time),
            )

    def get_or_compute(
        self,
        key: str,
        factory: Callable[[], Any],
        expire_in: int = 86400,
    ) -> Any:
        """命中直接返回；否则调用 factory 计算、写回并返回 JSON 规整后的值"""
        cached = self.get(key)
        if cached is not None:
            self.hits += 1
            logger.debug("Cache hit for %s", key)
            return cached
        self.misses += 1
        value = _normalize(factory())
        self.set(key, value, expire_in)
        logger.debug("Stored %s artefact %s", _kind_of(key), key)
        return value

"""
日志、原子写文件、默认缓存等工具
"""
import logging
import os
import tempfile
from pathlib import Path

from cache import Cache
from config import CACHE_CLEANUP_INTERVAL, CACHE_DB_PATH, CACHE_MAX_MEMORY_ITEMS

# ------------- 日志等级 -------------
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").strip().upper()


# ------------- logger -------------
def setup_logger(name: str = "tdf") -> logging.Logger:
    """返回已配置好的 logger 实例（带控制台 handler）"""
    logger = logging.getLogger(name)
    if logger.hasHandlers():
        return logger

    logger.setLevel(logging.getLevelName(LOG_LEVEL))
    handler = logging.StreamHandler()
    fmt = "[%(asctime)s] %(levelname)s - %(message)s"
    handler.setFormatter(logging.Formatter(fmt, datefmt="%H:%M:%S"))
    logger.addHandler(handler)
    return logger


# ------------- 原子写 -------------
def write_atomic(path: str | Path, text: str) -> Path:
    """先写临时文件再 rename，避免中断时留下半个文件"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    return path


# ------------- 缓存实例 -------------
_cache: Cache | None = None


def get_default_cache() -> Cache:
    """按需创建进程内共享的缓存实例（首次调用才建库）"""
    global _cache
    if _cache is None:
        _cache = Cache(
            db_path=CACHE_DB_PATH,
            max_memory_items=CACHE_MAX_MEMORY_ITEMS,
            cleanup_interval=CACHE_CLEANUP_INTERVAL,
        )
    return _cache

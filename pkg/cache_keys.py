"""缓存 key 生成与管理模块"""
import hashlib
import json
from typing import Any, Dict

from config import EMBED_ALGORITHM_VERSION, SEARCH_ALGORITHM_VERSION


def _hash_dict(data: Dict[str, Any]) -> str:
    """将字典转换为稳定的哈希值"""
    serialized = json.dumps(data, sort_keys=True)
    return hashlib.sha256(serialized.encode()).hexdigest()


def get_embedding_key(a: int, d: int, budget: int) -> str:
    """生成格点嵌入的缓存键，算法版本变化即失效"""
    key_data = {
        "a": a,
        "d": d,
        "budget": budget,
        "type": "embedding",
        "version": EMBED_ALGORITHM_VERSION,
    }
    return f"embedding:{_hash_dict(key_data)}"


def get_search_key(
    n_slots: int,
    excited: list[int],
    edges: list[list[int]],
    budget: int,
    seed: int,
) -> str:
    """生成局部搜索结果的缓存键，包含图本身与随机种子"""
    key_data = {
        "n_slots": n_slots,
        "excited": excited,
        "edges": edges,
        "budget": budget,
        "seed": seed,
        # 上下文信息
        "version": SEARCH_ALGORITHM_VERSION,
    }
    return f"search:{_hash_dict(key_data)}"

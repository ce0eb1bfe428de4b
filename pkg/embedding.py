"""
把 a 叉树嵌入 a 维格点：每条树边都是沿某一坐标轴的单位步长

行优先光栅化后，沿第 k 轴的一步对应槽位差 w^k（w = 2d-1），
因此第 0 轴的边由发射器天然产生，其余每根轴各需一个 TDF。
"""
import logging
from itertools import combinations
from typing import Optional

from pydantic import BaseModel, ConfigDict, model_validator

from cache import Cache
from cache_keys import get_embedding_key
from config import CACHE_EXPIRE, EMBED_BUDGET
from exceptions import EmbeddingInfeasibleError, InvalidFamilyError
from representation import tree_children, tree_size

logger = logging.getLogger(__name__)

Coord = tuple[int, ...]


# ---------- 容量 ----------
def raster_capacity(a: int, d: int) -> int:
    """格点可用容量 d^a + (d-1)^a"""
    return d ** a + (d - 1) ** a


def feasibility(a: int, d: int) -> int:
    """F(a,d) = d^a + (d-1)^a - (a^d-1)/(a-1)，Python int 不会溢出"""
    if a < 2 or d < 1:
        raise InvalidFamilyError(f"feasibility needs a >= 2 and d >= 1, got ({a}, {d})")
    return raster_capacity(a, d) - tree_size(a, d)


def max_embeddable_depth(a: int) -> int:
    """最大的 d 使 F(a,d) > 0；树指数增长，F 终将转负"""
    d = 2
    while feasibility(a, d) > 0:
        d += 1
    return d - 1


# ---------- 结果 ----------
class EmbeddingResult(BaseModel):
    """树节点（堆序编号）到格点坐标的单射，坐标落在 [0, w)^a"""

    model_config = ConfigDict(frozen=True)

    a: int
    d: int
    dims: tuple[int, ...]
    raster_width: int
    placement: dict[int, Coord]
    strategy: str

    @model_validator(mode="after")
    def _check_embedding(self) -> "EmbeddingResult":
        coords = list(self.placement.values())
        if len(set(coords)) != len(coords):
            raise ValueError("placement is not injective")
        for c in coords:
            if len(c) != self.a or any(not 0 <= x < self.raster_width for x in c):
                raise ValueError(f"coordinate {c} outside the raster")
        n = tree_size(self.a, self.d)
        if sorted(self.placement) != list(range(1, n + 1)):
            raise ValueError("placement must cover every tree node")
        for k in range(1, n + 1):
            for child in tree_children(k, self.a, n):
                diff = [abs(x - y) for x, y in zip(self.placement[k], self.placement[child])]
                if sorted(diff) != [0] * (self.a - 1) + [1]:
                    raise ValueError(f"tree edge ({k}, {child}) is not a unit lattice step")
        return self

    def _raw(self, coord: Coord) -> int:
        return sum(x * self.raster_width ** k for k, x in enumerate(coord))

    @property
    def _offset(self) -> int:
        return min(self._raw(c) for c in self.placement.values()) - 1

    def slot_of(self, node: int) -> int:
        """行优先光栅化后的时间槽编号（最小者为 1）"""
        return self._raw(self.placement[node]) - self._offset

    @property
    def n_slots(self) -> int:
        """光栅槽数（含虚节点）"""
        raws = [self._raw(c) for c in self.placement.values()]
        return max(raws) - min(raws) + 1

    @property
    def raster_capacity(self) -> int:
        return raster_capacity(self.a, self.d)

    def axis_delays(self) -> list[int]:
        return [self.raster_width ** k for k in range(self.a)]


# ---------- 回溯搜索 ----------
class _SearchBudget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def spend(self) -> bool:
        self.used += 1
        return self.used <= self.limit


def _neighbors(p: Coord) -> list[Coord]:
    out = []
    for axis in range(len(p)):
        for step in (-1, 1):
            q = list(p)
            q[axis] += step
            out.append(tuple(q))
    return out


def _raw_centered(p: Coord, w: int) -> int:
    return sum(x * w ** k for k, x in enumerate(p))


def _negate(p: Coord) -> Coord:
    return tuple(-x for x in p)


def _mirror_search(d: int, budget: _SearchBudget) -> Optional[dict[int, Coord]]:
    """二叉树专用：根在原点，左子树回溯放置，右子树取中心对称像"""
    a, n, w = 2, tree_size(2, d), 2 * d - 1
    origin = (0, 0)
    pos: dict[int, Coord] = {1: origin}
    if n == 1:
        return pos
    pos[2], pos[3] = (-1, 0), (1, 0)
    occupied = {origin, (-1, 0), (1, 0)}

    # 左子树内部节点（BFS 序）
    order = []
    frontier = [2]
    while frontier:
        order.extend(k for k in frontier if tree_children(k, a, n))
        frontier = [c for k in frontier for c in tree_children(k, a, n)]

    def mirror_of(k: int) -> int:
        # 中心反射把同层顺序倒过来：第 l 层偏移 o 对应偏移 2^(l-1)-1-o
        layer = k.bit_length()
        return 3 * 2 ** (layer - 1) - 1 - k

    def place(idx: int) -> bool:
        if idx == len(order):
            return True
        k = order[idx]
        kids = tree_children(k, a, n)
        free = sorted(
            (q for q in _neighbors(pos[k]) if q not in occupied and _negate(q) not in occupied),
            key=lambda q: _raw_centered(q, w),
        )
        for combo in combinations(free, len(kids)):
            if not budget.spend():
                return False
            taken = []
            for q in combo:
                if q in occupied or _negate(q) in occupied:
                    break
                occupied.update((q, _negate(q)))
                taken.append(q)
            if len(taken) == len(kids):
                for child, q in zip(kids, combo):
                    pos[child] = q
                    pos[mirror_of(child)] = _negate(q)
                if place(idx + 1):
                    return True
                for child in kids:
                    del pos[child]
                    del pos[mirror_of(child)]
            for q in taken:
                occupied.difference_update((q, _negate(q)))
        return False

    return pos if place(0) else None


def _general_search(a: int, d: int, budget: _SearchBudget) -> Optional[dict[int, Coord]]:
    """通用回溯：BFS 序逐个节点放置孩子，带邻居余量前向检查"""
    n, w = tree_size(a, d), 2 * d - 1
    origin = (0,) * a
    pos: dict[int, Coord] = {1: origin}
    at: dict[Coord, int] = {origin: 1}
    order = [k for k in range(1, n + 1) if tree_children(k, a, n)]
    expanded: set[int] = set()

    def free_neighbors(p: Coord) -> list[Coord]:
        return [q for q in _neighbors(p) if q not in at]

    def starved(sites: list[Coord]) -> bool:
        # 新占格点周围尚未展开的节点是否还有足够空位放孩子
        for q in sites:
            for r in _neighbors(q):
                k = at.get(r)
                if k is not None and k not in expanded and tree_children(k, a, n):
                    if len(free_neighbors(r)) < len(tree_children(k, a, n)):
                        return True
        return False

    def place(idx: int) -> bool:
        if idx == len(order):
            return True
        k = order[idx]
        kids = tree_children(k, a, n)
        free = sorted(free_neighbors(pos[k]), key=lambda q: _raw_centered(q, w))
        expanded.add(k)
        for combo in combinations(free, len(kids)):
            if not budget.spend():
                expanded.discard(k)
                return False
            for child, q in zip(kids, combo):
                pos[child] = q
                at[q] = child
            if not starved(list(combo)) and place(idx + 1):
                return True
            for child, q in zip(kids, combo):
                del pos[child]
                del at[q]
        expanded.discard(k)
        return False

    return pos if place(0) else None


def _search(a: int, d: int, budget_limit: int) -> dict:
    budget = _SearchBudget(budget_limit)
    if d == 1:
        return {"strategy": "trivial", "coords": [[0] * a]}
    pos = None
    strategy = "mirror"
    if a == 2:
        pos = _mirror_search(d, budget)
        if pos is None:
            logger.warning("Mirror embedding of TCS(2,%d) failed, falling back to backtracking", d)
    if pos is None:
        strategy = "backtracking"
        pos = _general_search(a, d, budget)
    if pos is None:
        return {"strategy": "exhausted", "coords": None, "used": budget.used}
    logger.debug("Embedded TCS(%d,%d) by %s after %d placements", a, d, strategy, budget.used)
    n = tree_size(a, d)
    return {"strategy": strategy, "coords": [list(pos[k]) for k in range(1, n + 1)]}


def embed_tree_in_lattice(
    a: int,
    d: int,
    budget: int = EMBED_BUDGET,
    cache: Optional[Cache] = None,
) -> EmbeddingResult:
    """
    把 TCS(a,d) 嵌入 a 维格点

    Raises:
        EmbeddingInfeasibleError: F(a,d) 不为正（reason="capacity"），
            或回溯在预算内找不到解（reason="search exhausted"）
    """
    f = feasibility(a, d)
    if d > 1 and f <= 0:
        raise EmbeddingInfeasibleError(a, d, "capacity", f)

    if cache is not None:
        key = get_embedding_key(a, d, budget)
        found = cache.get_or_compute(key, lambda: _search(a, d, budget), expire_in=CACHE_EXPIRE)
    else:
        found = _search(a, d, budget)

    if found["coords"] is None:
        raise EmbeddingInfeasibleError(a, d, f"search exhausted after {found.get('used', budget)} placements", f)

    r = d - 1
    w = 2 * d - 1
    placement = {
        k: tuple(x + r for x in coord)
        for k, coord in enumerate(found["coords"], start=1)
    }
    result = EmbeddingResult(
        a=a,
        d=d,
        dims=(w,) * a,
        raster_width=w,
        placement=placement,
        strategy=found["strategy"],
    )
    logger.info(
        "TCS(%d,%d) embedded: %d nodes in %d raster slots (capacity %d, width %d)",
        a, d, len(placement), result.n_slots, result.raster_capacity, w,
    )
    return result

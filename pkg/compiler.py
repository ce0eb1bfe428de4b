"""
编译器：把目标簇态图变成 TDF 调度

各个 pass 的区别只在于“如何给节点编号”：
- naive          恒等编号，每个延迟类一个 TDF
- layer          逐层对称编号，TCS 的 TDF 数与深度线性相关
- lattice        嵌入格点并引入虚节点，二叉树只需一个额外 TDF
- search         基于对换的爬山搜索，适用于任意图
"""
from __future__ import annotations

import logging
from collections import defaultdict
from typing import Iterable, NamedTuple, Optional, Sequence, Union

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from cache import Cache
from cache_keys import get_search_key
from config import CACHE_EXPIRE, DEFAULT_SEED, EMBED_BUDGET, SEARCH_BUDGET
from embedding import embed_tree_in_lattice, feasibility, max_embeddable_depth, raster_capacity
from exceptions import InvalidFamilyError
from representation import (
    ClusterGraph,
    DistributionMatrix,
    Edge,
    FamilyKind,
    FamilySpec,
    build_family,
    distribution_of,
    identity_numbering,
    relabel,
    tree_children,
    tree_size,
)

logger = logging.getLogger(__name__)

__all__ = [
    "Provenance",
    "TdfBlock",
    "Schedule",
    "TdfCounts",
    "schedule_from_graph",
    "compile_naive",
    "compile_layer_symmetric",
    "layer_symmetric_numbering",
    "compile_lattice_embedded",
    "minimize_delay_classes",
    "compile_family",
    "feasibility",
    "max_embeddable_depth",
    "raster_capacity",
    "tdf_count_report",
    "layer_symmetric_bound",
    "PASSES",
]

PASSES = ("naive", "layer", "lattice", "search")


# ---------- 调度数据结构 ----------
class Provenance(BaseModel):
    model_config = ConfigDict(frozen=True)

    pass_name: str
    params: dict[str, Union[int, str]] = Field(default_factory=dict)


class TdfBlock(BaseModel):
    """一个 TDF：延迟因子 α 与门掩码（对 i ∈ enabled_gates 施加 CZ(i, i+α)）"""

    model_config = ConfigDict(frozen=True)

    delay: int
    enabled_gates: tuple[int, ...] = ()

    @field_validator("delay")
    @classmethod
    def _positive_delay(cls, v: int) -> int:
        if v < 1:
            raise ValueError("delay must be >= 1")
        return v

    @field_validator("enabled_gates", mode="before")
    @classmethod
    def _sorted_mask(cls, v: Iterable[int]) -> tuple[int, ...]:
        items = list(v)
        if len(set(items)) != len(items):
            raise ValueError("duplicate gate in mask")
        return tuple(sorted(items))


class Schedule(BaseModel):
    """
    完整的生成协议

    excitation_set 为被激发的时间槽（T′₀），native_chain_gates 为发射器自带的
    相邻 CZ，blocks 为按流水线顺序排列的 TDF。numbering 把目标图的节点映射到
    调度的时间槽（可为单射，未命中的槽即虚节点）。
    """

    model_config = ConfigDict(frozen=True)

    n_slots: int
    excitation_set: tuple[int, ...] = ()
    native_chain_gates: tuple[int, ...] = ()
    blocks: tuple[TdfBlock, ...] = ()
    numbering: Optional[tuple[int, ...]] = None
    provenance: Provenance = Provenance(pass_name="manual")
    emission_period: int = 1

    @field_validator("excitation_set", "native_chain_gates", mode="before")
    @classmethod
    def _sorted_set(cls, v: Iterable[int]) -> tuple[int, ...]:
        items = list(v)
        if len(set(items)) != len(items):
            raise ValueError("duplicate slot index")
        return tuple(sorted(items))

    @model_validator(mode="after")
    def _check_invariants(self) -> "Schedule":
        if self.n_slots < 0:
            raise ValueError("n_slots must be >= 0")
        excited = set(self.excitation_set)
        for i in self.excitation_set:
            if not 1 <= i <= self.n_slots:
                raise ValueError(f"excited slot {i} outside [1, {self.n_slots}]")
        for i in self.native_chain_gates:
            if i not in excited or i + 1 not in excited:
                raise ValueError(f"native gate ({i}, {i + 1}) touches a vacuum slot")
        delays = [b.delay for b in self.blocks]
        if len(set(delays)) != len(delays):
            raise ValueError(f"block delays must be distinct, got {delays}")
        for b in self.blocks:
            for i in b.enabled_gates:
                if i + b.delay > self.n_slots:
                    raise ValueError(f"gate ({i}, {i + b.delay}) beyond n_slots={self.n_slots}")
                if i not in excited or i + b.delay not in excited:
                    raise ValueError(f"gate ({i}, {i + b.delay}) touches a vacuum slot")
        if self.numbering is not None:
            if len(set(self.numbering)) != len(self.numbering):
                raise ValueError("numbering is not injective")
            if any(not 1 <= x <= self.n_slots for x in self.numbering):
                raise ValueError("numbering leaves the slot range")
        return self

    def gates(self) -> list[Edge]:
        """全部 CZ：先原生相邻门，再按块顺序、槽位升序"""
        out = [(i, i + 1) for i in self.native_chain_gates]
        for b in self.blocks:
            out.extend((i, i + b.delay) for i in b.enabled_gates)
        return out

    def realized_graph(self) -> ClusterGraph:
        """门集合直接诱导的图（CZ 自逆，重复门按模 2 相消）"""
        parity: dict[Edge, int] = defaultdict(int)
        for edge in self.gates():
            parity[edge] ^= 1
        return ClusterGraph(
            n_slots=self.n_slots,
            excited=self.excitation_set,
            edges=[e for e, bit in parity.items() if bit],
        )

    def distribution(self) -> DistributionMatrix:
        return distribution_of(self.realized_graph())

    @property
    def delays(self) -> tuple[int, ...]:
        return tuple(b.delay for b in self.blocks)


class TdfCounts(NamedTuple):
    total_classes: int
    additional_tdfs: int


# ---------- 构造调度 ----------
def schedule_from_graph(
    hosted: ClusterGraph,
    numbering: Optional[Sequence[int]],
    provenance: Provenance,
    extra_delays: Iterable[int] = (),
) -> Schedule:
    """
    按延迟把已编号的图拆成原生门与 TDF 块

    hosted 已处于调度槽位空间；extra_delays 中的延迟即使没有门也保留一个块。
    """
    by_delay: dict[int, list[int]] = defaultdict(list)
    for i, j in hosted.edges:
        by_delay[j - i].append(i)
    for delay in extra_delays:
        if delay > 1:
            by_delay.setdefault(delay, [])
    blocks = [
        TdfBlock(delay=delay, enabled_gates=by_delay[delay])
        for delay in sorted(by_delay)
        if delay > 1
    ]
    return Schedule(
        n_slots=hosted.n_slots,
        excitation_set=hosted.excited,
        native_chain_gates=by_delay.get(1, []),
        blocks=blocks,
        numbering=tuple(numbering) if numbering is not None else None,
        provenance=provenance,
    )


def tdf_count_report(schedule: Schedule) -> TdfCounts:
    """总延迟类数（含原生类 1）与额外 TDF 数，两种口径同时给出"""
    native = 1 if schedule.native_chain_gates else 0
    return TdfCounts(len(schedule.blocks) + native, len(schedule.blocks))


def layer_symmetric_bound(a: int, d: int) -> int:
    """逐层对称编号的 TDF 数 (d-1)(a-1)+(a-1)，实际结果不超过它"""
    return (d - 1) * (a - 1) + (a - 1)


# ---------- naive ----------
def compile_naive(graph: ClusterGraph) -> Schedule:
    """恒等编号：每个大于 1 的延迟类对应一个 TDF"""
    schedule = schedule_from_graph(
        graph,
        identity_numbering(graph.n_slots),
        Provenance(pass_name="naive"),
    )
    logger.info("naive: %d slots, %d blocks", schedule.n_slots, len(schedule.blocks))
    return schedule


# ---------- layer ----------
def layer_symmetric_numbering(a: int, d: int) -> tuple[int, ...]:
    """堆序节点 -> 逐层对称编号；第 r 个孩子排在本层第 r 组，组内保持父节点顺序"""
    n = tree_size(a, d)
    slot = [0] * (n + 1)
    slot[1] = 1
    for layer in range(1, d):
        start = tree_size(a, layer - 1) + 1
        width = a ** (layer - 1)
        for k in range(start, start + width):
            for rank, child in enumerate(tree_children(k, a, n)):
                slot[child] = start + width + rank * width + (slot[k] - start)
    return tuple(slot[1:])


def compile_layer_symmetric(a: int, d: int) -> Schedule:
    if a < 2 or d < 1:
        raise InvalidFamilyError(f"layer-symmetric pass needs a >= 2 and d >= 1, got ({a}, {d})")
    graph = build_family(FamilySpec(family=FamilyKind.TCS, params=(a, d)))
    numbering = layer_symmetric_numbering(a, d)
    schedule = schedule_from_graph(
        relabel(graph, numbering),
        numbering,
        Provenance(pass_name="layer", params={"a": a, "d": d}),
    )
    logger.info("layer: TCS(%d,%d) -> delays %s", a, d, [1, *schedule.delays])
    return schedule


# ---------- lattice ----------
def compile_lattice_embedded(
    a: int,
    d: int,
    cache: Optional[Cache] = None,
    budget: int = EMBED_BUDGET,
) -> Schedule:
    """
    嵌入格点后的调度：第 0 轴为原生门，其余 a-1 根轴各一个 TDF

    只有真正的树边进入门掩码；格点上相邻但没有树边的激发对被屏蔽。
    """
    embedding = embed_tree_in_lattice(a, d, budget=budget, cache=cache)
    graph = build_family(FamilySpec(family=FamilyKind.TCS, params=(a, d)))
    numbering = tuple(embedding.slot_of(k) for k in range(1, graph.n_slots + 1))
    hosted = relabel(graph, numbering, embedding.n_slots)
    extra = embedding.axis_delays()[1:] if d > 1 else []
    schedule = schedule_from_graph(
        hosted,
        numbering,
        Provenance(pass_name="lattice", params={"a": a, "d": d, "strategy": embedding.strategy}),
        extra_delays=extra,
    )
    logger.info(
        "lattice: TCS(%d,%d) -> %d excitations in %d slots, delays %s",
        a, d, len(schedule.excitation_set), schedule.n_slots, list(schedule.delays),
    )
    return schedule


# ---------- search ----------
def _seed_orders(g: nx.Graph, nodes: list[int]) -> list[list[int]]:
    """恒等序 + 从每个节点出发的 BFS / DFS 序，逐个连通分量拼接"""

    def traverse(start: int, walker) -> list[int]:
        order: list[int] = []
        seen: set[int] = set()
        for root in [start, *nodes]:
            if root in seen:
                continue
            part = list(walker(g, root))
            order.extend(part)
            seen.update(part)
        return order

    orders = [list(nodes)]
    for start in nodes:
        orders.append(traverse(start, lambda h, s: nx.bfs_tree(h, s).nodes))
        orders.append(traverse(start, nx.dfs_preorder_nodes))
    if g.number_of_edges():
        orders.append(list(nx.utils.reverse_cuthill_mckee_ordering(g)))
    unique: list[list[int]] = []
    seen_orders: set[tuple[int, ...]] = set()
    for order in orders:
        key = tuple(order)
        if key not in seen_orders:
            seen_orders.add(key)
            unique.append(order)
    return unique


def _cost(perm: np.ndarray, us: np.ndarray, vs: np.ndarray) -> tuple[int, int]:
    """(除类 1 外的延迟类数, 间隔总和)，字典序比较"""
    if us.size == 0:
        return 0, 0
    gaps = np.abs(perm[us] - perm[vs])
    classes = np.unique(gaps)
    return int(np.count_nonzero(classes != 1)), int(gaps.sum())


def _search_numbering(graph: ClusterGraph, budget: int, seed: int) -> list[int]:
    n = graph.n_slots
    g = nx.Graph()
    g.add_nodes_from(range(1, n + 1))
    g.add_edges_from(graph.edges)
    us = np.array([i - 1 for i, _ in graph.edges], dtype=np.int64)
    vs = np.array([j - 1 for _, j in graph.edges], dtype=np.int64)

    seeds = _seed_orders(g, list(range(1, n + 1)))
    rng = np.random.default_rng(seed)
    per_seed = max(budget // len(seeds), 1) if budget > 0 else 0

    best_key: Optional[tuple] = None
    for order in seeds:
        perm = np.empty(n, dtype=np.int64)
        perm[np.array(order) - 1] = np.arange(1, n + 1)
        cost = _cost(perm, us, vs)
        if n >= 2:
            for _ in range(per_seed):
                x, y = rng.choice(n, size=2, replace=False)
                perm[x], perm[y] = perm[y], perm[x]
                trial = _cost(perm, us, vs)
                # 平移步也接受，便于走出平台
                if trial <= cost:
                    cost = trial
                else:
                    perm[x], perm[y] = perm[y], perm[x]
        key = (cost, tuple(int(p) for p in perm))
        if best_key is None or key < best_key:
            best_key = key
        logger.debug("search seed %s... -> cost %s", order[:3], cost)

    assert best_key is not None
    logger.info(
        "search: %d seeds x %d steps, best has %d blocks (gap sum %d)",
        len(seeds), per_seed, best_key[0][0], best_key[0][1],
    )
    return list(best_key[1])


def minimize_delay_classes(
    graph: ClusterGraph,
    budget: int = SEARCH_BUDGET,
    seed: int = DEFAULT_SEED,
    cache: Optional[Cache] = None,
) -> tuple[tuple[int, ...], Schedule]:
    """
    局部搜索最小化 |延迟类 \\ {1}|

    以恒等序为种子之一且只接受不变差的移动，因此结果不会比 naive 差。
    相同 (graph, budget, seed) 的结果逐位一致。
    """
    if cache is not None:
        key = get_search_key(
            graph.n_slots,
            list(graph.excited),
            [list(e) for e in graph.edges],
            budget,
            seed,
        )
        numbering = cache.get_or_compute(
            key, lambda: _search_numbering(graph, budget, seed), expire_in=CACHE_EXPIRE
        )
    else:
        numbering = _search_numbering(graph, budget, seed)

    numbering = tuple(numbering)
    schedule = schedule_from_graph(
        relabel(graph, numbering),
        numbering,
        Provenance(pass_name="search", params={"budget": budget, "seed": seed}),
    )
    return numbering, schedule


# ---------- 统一入口 ----------
def compile_family(
    graph: ClusterGraph,
    pass_name: str,
    family: Optional[FamilySpec] = None,
    budget: int = SEARCH_BUDGET,
    seed: int = DEFAULT_SEED,
    cache: Optional[Cache] = None,
) -> Schedule:
    """按 pass 名编译；layer / lattice 只对 TCS 态族有意义"""
    if pass_name == "naive":
        return compile_naive(graph)
    if pass_name == "search":
        return minimize_delay_classes(graph, budget=budget, seed=seed, cache=cache)[1]
    if pass_name in ("layer", "lattice"):
        if family is None or family.family is not FamilyKind.TCS:
            raise InvalidFamilyError(f"pass {pass_name!r} needs a tcs:A,D family")
        a, d = family.params
        if pass_name == "layer":
            return compile_layer_symmetric(a, d)
        return compile_lattice_embedded(a, d, cache=cache)
    raise InvalidFamilyError(f"unknown pass {pass_name!r}, expected one of {PASSES}")

"""
簇态的图表示与分布矩阵表示，以及各态族（1D / CCS / TCS / 格点）的构造

约定：时间槽编号从 1 开始，与光子发射顺序一致。
"""
from __future__ import annotations

import logging
from enum import Enum
from itertools import combinations, product
from typing import Iterable, Optional, Sequence

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from exceptions import (
    EntangleUnexcitedError,
    IndexOutOfRangeError,
    InvalidFamilyError,
    InvalidPermutationError,
)

logger = logging.getLogger(__name__)

Edge = tuple[int, int]


# ---------- 图表示 ----------
class ClusterGraph(BaseModel):
    """目标纠缠结构：n_slots 个时间槽，excited 为激发槽，edges 为无向边"""

    model_config = ConfigDict(frozen=True)

    n_slots: int
    excited: tuple[int, ...] = ()
    edges: tuple[Edge, ...] = ()

    @field_validator("n_slots")
    @classmethod
    def _positive(cls, v: int) -> int:
        if v < 0:
            raise ValueError("n_slots must be non-negative")
        return v

    @field_validator("excited", mode="before")
    @classmethod
    def _sort_excited(cls, v: Iterable[int]) -> tuple[int, ...]:
        items = list(v)
        if len(set(items)) != len(items):
            raise ValueError("duplicate excited slot")
        return tuple(sorted(items))

    @field_validator("edges", mode="before")
    @classmethod
    def _normalize_edges(cls, v: Iterable[Sequence[int]]) -> tuple[Edge, ...]:
        normalized = []
        for edge in v:
            i, j = edge
            if i == j:
                raise ValueError(f"self-loop on slot {i}")
            normalized.append((min(i, j), max(i, j)))
        if len(set(normalized)) != len(normalized):
            raise ValueError("duplicate edge")
        return tuple(sorted(normalized))

    @model_validator(mode="after")
    def _check_ranges(self) -> "ClusterGraph":
        for i in self.excited:
            if not 1 <= i <= self.n_slots:
                raise ValueError(f"excited slot {i} outside [1, {self.n_slots}]")
        excited = set(self.excited)
        for i, j in self.edges:
            if i not in excited or j not in excited:
                raise ValueError(f"edge ({i}, {j}) has an unexcited endpoint")
        return self

    @property
    def n_excited(self) -> int:
        return len(self.excited)

    @property
    def virtual(self) -> tuple[int, ...]:
        """未激发的时间槽（虚节点）"""
        excited = set(self.excited)
        return tuple(i for i in range(1, self.n_slots + 1) if i not in excited)

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.excited)
        g.add_edges_from(self.edges)
        return g

    def degree_sequence(self) -> list[int]:
        g = self.to_networkx()
        return sorted(d for _, d in g.degree())


# ---------- 分布矩阵 ----------
class DistributionMatrix(BaseModel):
    """上三角 0/1 矩阵 D：对角为激发，第 k 条超对角线为间隔 k 的纠缠"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int
    bits: np.ndarray

    @field_validator("bits", mode="before")
    @classmethod
    def _freeze_bits(cls, v) -> np.ndarray:
        arr = np.array(v)
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("bits must be 0/1")
        arr = arr.astype(np.uint8)
        arr.flags.writeable = False
        return arr

    @model_validator(mode="after")
    def _check_bits(self) -> "DistributionMatrix":
        bits = self.bits
        if bits.shape != (self.n, self.n):
            raise ValueError(f"bits must be {self.n}x{self.n}, got {bits.shape}")
        if np.tril(bits, -1).any():
            raise ValueError("strictly lower triangle must be zero")
        diag = np.diag(bits).astype(bool)
        rows, cols = np.nonzero(np.triu(bits, 1))
        if not (diag[rows].all() and diag[cols].all()):
            raise ValueError("entanglement between unexcited slots")
        return self

    @classmethod
    def zeros(cls, n: int) -> "DistributionMatrix":
        return cls(n=n, bits=np.zeros((n, n), dtype=np.uint8))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DistributionMatrix):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.bits, other.bits)

    def __hash__(self) -> int:
        return hash((self.n, self.bits.tobytes()))

    @property
    def trace(self) -> int:
        return int(np.trace(self.bits))

    def excited(self) -> tuple[int, ...]:
        return tuple(int(i) + 1 for i in np.flatnonzero(np.diag(self.bits)))

    def entangled_pairs(self) -> list[Edge]:
        rows, cols = np.nonzero(np.triu(self.bits, 1))
        return [(int(i) + 1, int(j) + 1) for i, j in zip(rows, cols)]


# ---------- 生成算符 ----------
class OpKind(str, Enum):
    EXCITE = "Excite"
    ENTANGLE = "Entangle"


class GenOp(BaseModel):
    """激发算符 X_i 或纠缠算符 E_{i,α}（连接 i 与 i+α）"""

    model_config = ConfigDict(frozen=True)

    kind: OpKind
    target: int
    delay: Optional[int] = None

    @model_validator(mode="after")
    def _check_delay(self) -> "GenOp":
        if self.kind is OpKind.ENTANGLE and (self.delay is None or self.delay < 1):
            raise ValueError("Entangle needs a positive delay")
        if self.kind is OpKind.EXCITE and self.delay is not None:
            raise ValueError("Excite takes no delay")
        return self

    @classmethod
    def excite(cls, i: int) -> "GenOp":
        return cls(kind=OpKind.EXCITE, target=i)

    @classmethod
    def entangle(cls, i: int, alpha: int) -> "GenOp":
        return cls(kind=OpKind.ENTANGLE, target=i, delay=alpha)


# ---------- 态族 ----------
class FamilyKind(str, Enum):
    LINEAR = "linear"
    CCS = "ccs"
    TCS = "tcs"
    LATTICE = "lattice"


_ARITY = {FamilyKind.LINEAR: 1, FamilyKind.CCS: 1, FamilyKind.TCS: 2}


class FamilySpec(BaseModel):
    """命名态族：Linear(N) / CCS(N) / TCS(a,d) / Lattice(extents)"""

    model_config = ConfigDict(frozen=True)

    family: FamilyKind
    params: tuple[int, ...]

    @model_validator(mode="after")
    def _check_params(self) -> "FamilySpec":
        arity = _ARITY.get(self.family)
        if arity is not None and len(self.params) != arity:
            raise ValueError(f"{self.family.value} takes {arity} parameter(s)")
        if self.family is FamilyKind.TCS:
            a, d = self.params
            if a < 2 or d < 1:
                raise ValueError("TCS needs a >= 2 and d >= 1")
        elif not self.params or min(self.params) < 1:
            raise ValueError(f"{self.family.value} parameters must be >= 1")
        return self

    @classmethod
    def parse(cls, text: str) -> "FamilySpec":
        """解析 `tcs:2,4` / `linear:5` / `lattice:3,4` 形式的字符串"""
        try:
            name, _, raw = text.strip().partition(":")
            params = tuple(int(p) for p in raw.replace("x", ",").split(",") if p.strip())
            return cls(family=FamilyKind(name.lower()), params=params)
        except ValueError as e:
            raise InvalidFamilyError(f"Bad family spec {text!r}: {e}") from e

    @property
    def label(self) -> str:
        return f"{self.family.value}:{','.join(map(str, self.params))}"


def tree_size(a: int, d: int) -> int:
    """a 叉 d 层树的节点数 (a^d-1)/(a-1)"""
    return (a ** d - 1) // (a - 1)


def tree_parent(k: int, a: int) -> int:
    """堆序下节点 k 的父节点；节点 k 的孩子为 a(k-1)+2 … ak+1"""
    return (k - 2) // a + 1


def tree_children(k: int, a: int, n: int) -> list[int]:
    first = a * (k - 1) + 2
    return [c for c in range(first, first + a) if c <= n]


def _lattice_edges(dims: Sequence[int]) -> list[Edge]:
    strides = [1]
    for extent in dims[:-1]:
        strides.append(strides[-1] * extent)
    edges = []
    for coord in product(*(range(e) for e in dims)):
        index = 1 + sum(c * s for c, s in zip(coord, strides))
        for axis, (c, extent) in enumerate(zip(coord, dims)):
            if c + 1 < extent:
                edges.append((index, index + strides[axis]))
    return edges


def build_family(spec: FamilySpec) -> ClusterGraph:
    """按态族构造目标图，所有槽均激发"""
    if spec.family is FamilyKind.LINEAR:
        (n,) = spec.params
        edges = [(i, i + 1) for i in range(1, n)]
    elif spec.family is FamilyKind.CCS:
        (n,) = spec.params
        edges = list(combinations(range(1, n + 1), 2))
    elif spec.family is FamilyKind.TCS:
        a, d = spec.params
        n = tree_size(a, d)
        edges = [(tree_parent(k, a), k) for k in range(2, n + 1)]
    else:
        n = int(np.prod(spec.params))
        edges = _lattice_edges(spec.params)
    logger.debug("Built %s: %d nodes, %d edges", spec.label, n, len(edges))
    return ClusterGraph(n_slots=n, excited=range(1, n + 1), edges=edges)


# ---------- 矩阵运算 ----------
def apply_ops(ops: Iterable[GenOp], n_slots: int) -> DistributionMatrix:
    """从全零矩阵 M0 出发依次作用 X / E；E 按模 2 翻转（CZ 自逆）"""
    bits = np.zeros((n_slots, n_slots), dtype=np.uint8)
    for op in ops:
        i = op.target
        if not 1 <= i <= n_slots:
            raise IndexOutOfRangeError(i, n_slots)
        if op.kind is OpKind.EXCITE:
            bits[i - 1, i - 1] = 1
            continue
        j = i + op.delay
        if j > n_slots:
            raise IndexOutOfRangeError(j, n_slots, f"Entangle({i}, {op.delay}) reaches slot {j} > {n_slots}")
        if not (bits[i - 1, i - 1] and bits[j - 1, j - 1]):
            raise EntangleUnexcitedError(i, j)
        bits[i - 1, j - 1] ^= 1
    return DistributionMatrix(n=n_slots, bits=bits)


def _check_numbering(numbering: Sequence[int], n_from: int, n_to: int, bijective: bool) -> list[int]:
    mapping = [int(x) for x in numbering]
    if len(mapping) != n_from:
        raise InvalidPermutationError(f"numbering has {len(mapping)} entries, expected {n_from}")
    if len(set(mapping)) != len(mapping):
        raise InvalidPermutationError("numbering is not injective")
    if any(not 1 <= x <= n_to for x in mapping):
        raise InvalidPermutationError(f"numbering leaves [1, {n_to}]")
    if bijective and n_from != n_to:
        raise InvalidPermutationError("numbering is not a permutation")
    return mapping


def relabel(graph: ClusterGraph, numbering: Sequence[int], n_slots: Optional[int] = None) -> ClusterGraph:
    """按单射编号把图搬到 n_slots 个槽里，多出的槽成为虚节点"""
    n_to = graph.n_slots if n_slots is None else n_slots
    pi = _check_numbering(numbering, graph.n_slots, n_to, bijective=False)
    return ClusterGraph(
        n_slots=n_to,
        excited=[pi[i - 1] for i in graph.excited],
        edges=[(pi[i - 1], pi[j - 1]) for i, j in graph.edges],
    )


def identity_numbering(n: int) -> tuple[int, ...]:
    return tuple(range(1, n + 1))


def distribution_of(graph: ClusterGraph) -> DistributionMatrix:
    """当前编号下的分布矩阵"""
    n = graph.n_slots
    bits = np.zeros((n, n), dtype=np.uint8)
    for i in graph.excited:
        bits[i - 1, i - 1] = 1
    for i, j in graph.edges:
        bits[i - 1, j - 1] = 1
    return DistributionMatrix(n=n, bits=bits)


def to_distribution(graph: ClusterGraph, numbering: Optional[Sequence[int]] = None) -> DistributionMatrix:
    """按置换 π 重新编号后的分布矩阵"""
    if numbering is None:
        return distribution_of(graph)
    _check_numbering(numbering, graph.n_slots, graph.n_slots, bijective=True)
    return distribution_of(relabel(graph, numbering))


def graph_of(D: DistributionMatrix) -> ClusterGraph:
    """分布矩阵还原为图"""
    return ClusterGraph(n_slots=D.n, excited=D.excited(), edges=D.entangled_pairs())


def delay_classes(D: DistributionMatrix) -> frozenset[int]:
    """含 1 的超对角线编号集合 {j-i}"""
    rows, cols = np.nonzero(np.triu(D.bits, 1))
    return frozenset(int(k) for k in np.unique(cols - rows))


def gate_counts(D: DistributionMatrix) -> tuple[int, int]:
    """(N_H, N_CZ) = (Tr D, ||D|| - Tr D)，||D|| 取逐元素和"""
    n_h = D.trace
    n_cz = int(D.bits.sum()) - n_h
    return n_h, n_cz


# ---------- 向量值块矩阵 ----------
_KET_ONE = np.array([1, 0], dtype=np.uint8)
_KET_ZERO = np.array([0, 1], dtype=np.uint8)


def block_matrix(D: DistributionMatrix) -> np.ndarray:
    """按需重建 2N×N 块矩阵 M：|1⟩=(1,0)ᵀ，|0⟩=(0,1)ᵀ，下三角为零向量"""
    n = D.n
    M = np.zeros((2 * n, n), dtype=np.uint8)
    for i in range(n):
        for j in range(i, n):
            M[2 * i:2 * i + 2, j] = _KET_ONE if D.bits[i, j] else _KET_ZERO
    return M


def project(M: np.ndarray) -> DistributionMatrix:
    """D = P_N M，P_N = I_N ⊗ (1,0)"""
    n = M.shape[1]
    P = np.kron(np.eye(n, dtype=np.uint8), np.array([[1, 0]], dtype=np.uint8))
    return DistributionMatrix(n=n, bits=P @ M)


# ---------- 生成序列 ----------
def linear_ops(n: int) -> list[GenOp]:
    """1D 簇态：先全部激发，再依次 E_{i-1,i}"""
    return [GenOp.excite(i) for i in range(1, n + 1)] + [GenOp.entangle(i, 1) for i in range(1, n)]


def ccs_ops(n: int) -> list[GenOp]:
    """完全图簇态：逐个延迟因子 α 施加全部 E_{i,α}"""
    ops = [GenOp.excite(i) for i in range(1, n + 1)]
    for alpha in range(1, n):
        ops.extend(GenOp.entangle(i, alpha) for i in range(1, n + 1) if i + alpha <= n)
    return ops


def ops_for_graph(graph: ClusterGraph) -> list[GenOp]:
    """规范生成序列：先激发，再按 (延迟, 目标) 升序纠缠"""
    ops = [GenOp.excite(i) for i in graph.excited]
    ops.extend(GenOp.entangle(i, j - i) for i, j in sorted(graph.edges, key=lambda e: (e[1] - e[0], e[0])))
    return ops

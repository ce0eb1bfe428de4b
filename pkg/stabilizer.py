"""
稳定子验证：|+⟩ 初始化 + CZ 线路的精确模拟

约定：对外接口使用 1 起始的时间槽编号；内部数组下标为 0 起始。
虚节点是固定在 |0⟩ 的真实量子比特（由 Z 稳定），CZ 作用其上不改变态。
"""
from __future__ import annotations

import logging
from typing import Iterable, Optional, Sequence

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, computed_field, field_validator, model_validator

from compiler import Schedule
from config import DENSE_MAX_QUBITS, NORM_TOL
from exceptions import IndexOutOfRangeError, NotGraphStateError, TooLargeError
from representation import ClusterGraph, Edge, identity_numbering, relabel

logger = logging.getLogger(__name__)


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


# ---------- 数据结构 ----------
class StabilizerTableau(BaseModel):
    """n 个生成元：第 r 行为 (-1)^signs[r] ∏ X^x Z^z"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int
    x_bits: np.ndarray
    z_bits: np.ndarray
    signs: np.ndarray

    @field_validator("x_bits", "z_bits", "signs", mode="before")
    @classmethod
    def _as_bits(cls, v) -> np.ndarray:
        return _readonly(np.array(v, dtype=np.uint8) & 1)

    @model_validator(mode="after")
    def _check_shapes(self) -> "StabilizerTableau":
        n = self.n
        if self.x_bits.shape != (n, n) or self.z_bits.shape != (n, n) or self.signs.shape != (n,):
            raise ValueError(f"tableau arrays must be {n}x{n}, {n}x{n} and {n}")
        return self

    def packed(self) -> bytes:
        """按行打包成机器字，用于哈希与快速比较"""
        rows = np.concatenate([self.x_bits, self.z_bits, self.signs[:, None]], axis=1)
        return np.packbits(rows, axis=1).tobytes()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StabilizerTableau):
            return NotImplemented
        return self.n == other.n and self.packed() == other.packed()

    def __hash__(self) -> int:
        return hash((self.n, self.packed()))

    def pauli_strings(self) -> list[str]:
        """人类可读的生成元，如 '+XZI'"""
        out = []
        for r in range(self.n):
            chars = []
            for q in range(self.n):
                x, z = self.x_bits[r, q], self.z_bits[r, q]
                chars.append("IXZY"[x + 2 * z])
            out.append(("-" if self.signs[r] else "+") + "".join(chars))
        return out


class DenseState(BaseModel):
    """态矢量，第 q 个量子比特对应大端序第 q 位"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int
    amplitudes: np.ndarray

    @field_validator("amplitudes", mode="before")
    @classmethod
    def _as_complex(cls, v) -> np.ndarray:
        return _readonly(np.array(v, dtype=np.complex128).reshape(-1))

    @model_validator(mode="after")
    def _check_state(self) -> "DenseState":
        if self.n > DENSE_MAX_QUBITS:
            raise TooLargeError(self.n, DENSE_MAX_QUBITS)
        if self.amplitudes.shape != (2 ** self.n,):
            raise ValueError(f"expected {2 ** self.n} amplitudes, got {self.amplitudes.size}")
        norm = float(np.vdot(self.amplitudes, self.amplitudes).real)
        if abs(norm - 1.0) > 1e3 * NORM_TOL:
            raise ValueError(f"state is not normalized (|psi|^2 = {norm})")
        return self


# ---------- 行运算 ----------
def _phase_exponent(x1, z1, x2, z2) -> np.ndarray:
    """两 Pauli 相乘时每个位置贡献的 i 的幂"""
    x1, z1, x2, z2 = (np.asarray(a, dtype=np.int64) for a in (x1, z1, x2, z2))
    return np.where(
        (x1 == 1) & (z1 == 1), z2 - x2,
        np.where(
            (x1 == 1) & (z1 == 0), z2 * (2 * x2 - 1),
            np.where((x1 == 0) & (z1 == 1), x2 * (1 - 2 * z2), 0),
        ),
    )


def _rowsum(x: np.ndarray, z: np.ndarray, r: np.ndarray, h: int, i: int) -> None:
    """第 h 行 <- 第 i 行 · 第 h 行，符号按相位精确跟踪"""
    total = 2 * int(r[h]) + 2 * int(r[i]) + int(_phase_exponent(x[i], z[i], x[h], z[h]).sum())
    r[h] = (total % 4) // 2
    x[h] ^= x[i]
    z[h] ^= z[i]


def _cz_inplace(x: np.ndarray, z: np.ndarray, r: np.ndarray, a: int, b: int) -> None:
    r ^= x[:, a] & x[:, b] & (z[:, a] ^ z[:, b])
    z[:, a] ^= x[:, b]
    z[:, b] ^= x[:, a]


def _arrays(t: StabilizerTableau) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return t.x_bits.copy(), t.z_bits.copy(), t.signs.copy()


def _tableau(x: np.ndarray, z: np.ndarray, r: np.ndarray) -> StabilizerTableau:
    return StabilizerTableau(n=len(r), x_bits=x, z_bits=z, signs=r)


# ---------- 基本操作 ----------
def prepare_plus(excited: Iterable[int], n_slots: int) -> StabilizerTableau:
    """激发槽由 X 稳定（|+⟩），虚节点由 Z 稳定（|0⟩）"""
    excited = set(excited)
    for i in excited:
        if not 1 <= i <= n_slots:
            raise IndexOutOfRangeError(i, n_slots)
    mask = np.array([i + 1 in excited for i in range(n_slots)], dtype=np.uint8)
    eye = np.eye(n_slots, dtype=np.uint8)
    return _tableau(eye * mask[:, None], eye * (1 - mask)[:, None], np.zeros(n_slots, dtype=np.uint8))


def _check_pair(n: int, i: int, j: int) -> None:
    for k in (i, j):
        if not 1 <= k <= n:
            raise IndexOutOfRangeError(k, n)
    if i == j:
        raise ValueError(f"CZ needs two distinct qubits, got ({i}, {j})")


def apply_cz(t: StabilizerTableau, i: int, j: int) -> StabilizerTableau:
    """共轭规则 X_i -> X_i Z_j，X_j -> X_j Z_i，返回新表"""
    _check_pair(t.n, i, j)
    x, z, r = _arrays(t)
    _cz_inplace(x, z, r, i - 1, j - 1)
    return _tableau(x, z, r)


def run_gates(excited: Iterable[int], n_slots: int, gates: Iterable[Edge]) -> StabilizerTableau:
    """在独占的数组上依次施加 CZ，最后冻结成值"""
    t = prepare_plus(excited, n_slots)
    x, z, r = _arrays(t)
    for i, j in gates:
        _check_pair(n_slots, i, j)
        _cz_inplace(x, z, r, i - 1, j - 1)
    return _tableau(x, z, r)


def run_schedule(s: Schedule) -> StabilizerTableau:
    """prepare_plus，再原生门，再逐块按槽位升序施加掩码内的门"""
    return run_gates(s.excitation_set, s.n_slots, s.gates())


# ---------- 规范形 ----------
def canonical_form(t: StabilizerTableau) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    GF(2) 上的完全约化行阶梯形：先 X 块后 Z 块，最低下标优先选主元

    Raises:
        ValueError: 生成元线性相关
    """
    n = t.n
    x, z, r = _arrays(t)
    row = 0
    for col in range(2 * n):
        bits = x[:, col] if col < n else z[:, col - n]
        candidates = [i for i in range(row, n) if bits[i]]
        if not candidates:
            continue
        p = candidates[0]
        if p != row:
            x[[p, row]] = x[[row, p]]
            z[[p, row]] = z[[row, p]]
            r[[p, row]] = r[[row, p]]
        for i in range(n):
            if i != row and (x[i, col] if col < n else z[i, col - n]):
                _rowsum(x, z, r, i, row)
        row += 1
        if row == n:
            break
    if row != n:
        raise ValueError("generators are not independent")
    return x, z, r


def check_invariants(t: StabilizerTableau) -> None:
    """生成元独立且两两对易，否则抛 ValueError"""
    x = t.x_bits.astype(np.int64)
    z = t.z_bits.astype(np.int64)
    symplectic = (x @ z.T + z @ x.T) % 2
    if symplectic.any():
        raise ValueError("generators do not commute")
    canonical_form(t)


def states_equal(t1: StabilizerTableau, t2: StabilizerTableau) -> bool:
    """稳定子群相同（含符号）当且仅当规范形相同"""
    if t1.n != t2.n:
        raise ValueError(f"qubit counts differ: {t1.n} vs {t2.n}")
    return all(np.array_equal(a, b) for a, b in zip(canonical_form(t1), canonical_form(t2)))


def extract_graph(t: StabilizerTableau, excited: Optional[Iterable[int]] = None) -> ClusterGraph:
    """
    从规范形读出图：X 块主元行给出激发比特，其 Z 尾即邻接关系

    Raises:
        NotGraphStateError: 规范形不是图态形式
    """
    n = t.n
    x, z, r = canonical_form(t)
    if r.any():
        raise NotGraphStateError("canonical form carries negative signs")

    x_rows = [i for i in range(n) if x[i].any()]
    found = []
    for i in x_rows:
        cols = np.flatnonzero(x[i])
        if cols.size != 1:
            raise NotGraphStateError(f"row {i} has X support on {cols.size} qubits")
        found.append(int(cols[0]))
    excited_idx = set(found)
    vacuum_idx = [q for q in range(n) if q not in excited_idx]

    for i in range(len(x_rows), n):
        cols = np.flatnonzero(z[i])
        if cols.size != 1 or int(cols[0]) in excited_idx:
            raise NotGraphStateError(f"row {i} is not a single Z on a vacuum qubit")

    adjacency = np.zeros((n, n), dtype=np.uint8)
    for i, q in zip(x_rows, found):
        adjacency[q] = z[i]
    if adjacency[:, vacuum_idx].any():
        raise NotGraphStateError("vacuum qubit appears in a Z tail")
    if np.diag(adjacency).any() or not np.array_equal(adjacency, adjacency.T):
        raise NotGraphStateError("Z tails do not form a simple undirected graph")

    excited_slots = sorted(q + 1 for q in excited_idx)
    if excited is not None and sorted(excited) != excited_slots:
        raise NotGraphStateError(
            f"excited set {sorted(excited)} differs from X support {excited_slots}"
        )
    rows, cols = np.nonzero(np.triu(adjacency, 1))
    return ClusterGraph(
        n_slots=n,
        excited=excited_slots,
        edges=[(int(i) + 1, int(j) + 1) for i, j in zip(rows, cols)],
    )


# ---------- 稠密态矢量 ----------
def _bit_table(n: int) -> np.ndarray:
    """(2^n, n) 的比特表，第 q 列为第 q 个量子比特（大端序）"""
    idx = np.arange(2 ** n)
    return ((idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1).astype(np.int64)


def dense_from_gates(excited: Iterable[int], n_slots: int, gates: Iterable[Edge]) -> DenseState:
    """振幅 ∝ (-1)^{Σ b_i b_j}，虚节点的比特必须为 0"""
    if n_slots > DENSE_MAX_QUBITS:
        raise TooLargeError(n_slots, DENSE_MAX_QUBITS)
    bits = _bit_table(n_slots)
    excited_idx = [i - 1 for i in set(excited)]
    vacuum = np.ones(n_slots, dtype=bool)
    vacuum[excited_idx] = False
    support = ~bits[:, vacuum].any(axis=1)
    phase = np.zeros(2 ** n_slots, dtype=np.int64)
    for i, j in gates:
        phase ^= bits[:, i - 1] & bits[:, j - 1]
    amplitudes = np.where(support, 1.0 - 2.0 * phase, 0.0) / np.sqrt(2.0 ** len(excited_idx))
    return DenseState(n=n_slots, amplitudes=amplitudes)


def dense_oracle(s: Schedule) -> DenseState:
    """同一调度的振幅级模拟"""
    return dense_from_gates(s.excitation_set, s.n_slots, s.gates())


def dense_graph_state(graph: ClusterGraph) -> DenseState:
    return dense_from_gates(graph.excited, graph.n_slots, graph.edges)


def dense_fidelity(a: DenseState, b: DenseState) -> float:
    """纯态保真度 |⟨a|b⟩|²"""
    if a.n != b.n:
        raise ValueError(f"qubit counts differ: {a.n} vs {b.n}")
    return float(min(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2, 1.0))


def _apply_pauli(psi: np.ndarray, x_row: np.ndarray, z_row: np.ndarray, sign: int) -> np.ndarray:
    out = psi
    for q in range(psi.ndim):
        if z_row[q]:
            out = out.copy()
            index = [slice(None)] * psi.ndim
            index[q] = 1
            out[tuple(index)] *= -1
        if x_row[q]:
            out = np.flip(out, axis=q)
        if x_row[q] and z_row[q]:
            out = out * 1j
    return -out if sign else out


def tableau_to_dense(t: StabilizerTableau) -> DenseState:
    """对 |0…0⟩ 依次施加投影 (I+g)/2；若被投没则换一个计算基态重试"""
    n = t.n
    if n > DENSE_MAX_QUBITS:
        raise TooLargeError(n, DENSE_MAX_QUBITS)
    for start in range(2 ** n):
        psi = np.zeros(2 ** n, dtype=np.complex128)
        psi[start] = 1.0
        psi = psi.reshape((2,) * n) if n else psi.reshape(())
        for row in range(n):
            psi = (psi + _apply_pauli(psi, t.x_bits[row], t.z_bits[row], int(t.signs[row]))) / 2
        norm = np.linalg.norm(psi)
        if norm > 1e-6:
            return DenseState(n=n, amplitudes=(psi / norm).reshape(-1))
    raise ValueError("tableau stabilizes no state")


# ---------- 调度验证 ----------
class VerifyReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    target_edges: tuple[Edge, ...]
    realized_edges: tuple[Edge, ...]
    missing: tuple[Edge, ...]
    extra: tuple[Edge, ...]
    target_excited: tuple[int, ...]
    realized_excited: tuple[int, ...]
    isomorphic: bool

    @computed_field
    @property
    def verdict(self) -> bool:
        return not self.missing and not self.extra and self.target_excited == self.realized_excited


def verify_schedule(s: Schedule, target: ClusterGraph) -> VerifyReport:
    """按调度记录的编号把目标图搬到槽位空间，与稳定子模拟读出的图逐边比较"""
    numbering: Sequence[int] = s.numbering if s.numbering is not None else identity_numbering(target.n_slots)
    expected = relabel(target, numbering, s.n_slots)
    realized = extract_graph(run_schedule(s))
    target_set, realized_set = set(expected.edges), set(realized.edges)
    report = VerifyReport(
        target_edges=expected.edges,
        realized_edges=realized.edges,
        missing=tuple(sorted(target_set - realized_set)),
        extra=tuple(sorted(realized_set - target_set)),
        target_excited=expected.excited,
        realized_excited=realized.excited,
        isomorphic=nx.is_isomorphic(expected.to_networkx(), realized.to_networkx()),
    )
    logger.info(
        "verify: %d target edges, %d realized, %d missing, %d extra",
        len(report.target_edges), len(report.realized_edges), len(report.missing), len(report.extra),
    )
    return report

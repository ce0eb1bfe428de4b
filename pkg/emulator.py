"""
TDF 物理时间线的离散事件仿真

单一全局时钟（以发射周期 τ₀ 为单位，τ₀ = 1）：
- Emit(i)            t = i，只对激发槽
- Return(i, k)       t = i + α_k，光子绕第 k 个 TDF 一圈后回到发射器
- Gate(i, i+α_k, k)  与 Return 同时，当且仅当 i 在第 k 块的门掩码中
- HandOff(i, k-1, k) 光子离开上一级进入第 k 块
同一时刻按 Return < Gate < Emit < HandOff 排序，等价于“恰在发射之前”返回。
"""
from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from pydantic import BaseModel, ConfigDict, field_validator

from compiler import Schedule
from exceptions import DelayMismatchError, MaskViolationError
from representation import Edge

logger = logging.getLogger(__name__)


class Chirality(str, Enum):
    """哪个传播方向获得 π 相位；两者最终都等价于 CZ"""

    SCATTER_LEFT = "ScatterLeft"
    SCATTER_RIGHT = "ScatterRight"


class BlockConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    delay: int
    chirality: Chirality = Chirality.SCATTER_LEFT

    @field_validator("delay")
    @classmethod
    def _positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("delay must be >= 1")
        return v


class EventKind(str, Enum):
    RETURN = "Return"
    GATE = "Gate"
    EMIT = "Emit"
    HANDOFF = "HandOff"


_KIND_ORDER = {EventKind.RETURN: 0, EventKind.GATE: 1, EventKind.EMIT: 2, EventKind.HANDOFF: 3}


@dataclass(frozen=True)
class TimelineEvent:
    time: Fraction
    kind: EventKind
    slot: int
    block: int = 0
    partner: Optional[int] = None
    to_block: Optional[int] = None

    def sort_key(self) -> tuple:
        return (self.time, _KIND_ORDER[self.kind], self.block, self.slot, self.partner or 0)

    def args(self) -> dict[str, int]:
        if self.kind is EventKind.EMIT:
            return {"slot": self.slot}
        if self.kind is EventKind.RETURN:
            return {"slot": self.slot, "block": self.block}
        if self.kind is EventKind.GATE:
            return {"i": self.slot, "j": self.partner, "block": self.block}
        return {"slot": self.slot, "from": self.block, "to": self.to_block}

    def format(self) -> str:
        args = ",".join(f"{k}={v}" for k, v in self.args().items())
        return f"t={self.time} kind={self.kind.value} args={args}"


class _EventList:
    """按 (时间, 类型序, 块, 槽) 出队的优先队列"""

    def __init__(self):
        self._queue: list[tuple[tuple, int, TimelineEvent]] = []
        self._seq = 0

    def push(self, event: TimelineEvent) -> None:
        heapq.heappush(self._queue, (event.sort_key(), self._seq, event))
        self._seq += 1

    def drain(self) -> list[TimelineEvent]:
        out = []
        while self._queue:
            out.append(heapq.heappop(self._queue)[-1])
        return out

    def __len__(self) -> int:
        return len(self._queue)


def default_block_configs(s: Schedule) -> list[BlockConfig]:
    """第一块右向散射，后续块左向散射"""
    return [
        BlockConfig(
            delay=b.delay,
            chirality=Chirality.SCATTER_RIGHT if k == 0 else Chirality.SCATTER_LEFT,
        )
        for k, b in enumerate(s.blocks)
    ]


def _check_alignment(s: Schedule, blocks: Sequence[BlockConfig]) -> None:
    if len(blocks) != len(s.blocks):
        raise DelayMismatchError(f"{len(blocks)} block configs for {len(s.blocks)} schedule blocks")
    for k, (cfg, blk) in enumerate(zip(blocks, s.blocks), start=1):
        if cfg.delay != blk.delay:
            raise DelayMismatchError(f"block {k}: config delay {cfg.delay} != schedule delay {blk.delay}")


def _check_masks(s: Schedule) -> None:
    # 掩码引用真空槽在物理上意味着对空时间箱发脉冲
    excited = set(s.excitation_set)
    for i in s.native_chain_gates:
        if i not in excited or i + 1 not in excited:
            raise MaskViolationError(f"native gate ({i}, {i + 1}) references a vacuum slot")
    for k, blk in enumerate(s.blocks, start=1):
        for i in blk.enabled_gates:
            if i not in excited or i + blk.delay not in excited:
                raise MaskViolationError(
                    f"block {k} (delay {blk.delay}) enables gate ({i}, {i + blk.delay}) on a vacuum slot"
                )


def emulate(s: Schedule, blocks: Optional[Sequence[BlockConfig]] = None) -> list[TimelineEvent]:
    """
    生成整条时间线

    Raises:
        DelayMismatchError: blocks 与调度的 TDF 块不一一对应
        MaskViolationError: 门掩码引用了虚节点
    """
    configs = list(blocks) if blocks is not None else default_block_configs(s)
    _check_alignment(s, configs)
    _check_masks(s)

    events = _EventList()
    for i in s.excitation_set:
        events.push(TimelineEvent(Fraction(i), EventKind.EMIT, i))
    for i in s.native_chain_gates:
        events.push(TimelineEvent(Fraction(i + 1), EventKind.GATE, i, block=0, partner=i + 1))

    previous_delay = 0
    for k, blk in enumerate(s.blocks, start=1):
        mask = set(blk.enabled_gates)
        for i in s.excitation_set:
            events.push(TimelineEvent(Fraction(i + previous_delay), EventKind.HANDOFF, i, block=k - 1, to_block=k))
            t = Fraction(i + blk.delay)
            events.push(TimelineEvent(t, EventKind.RETURN, i, block=k))
            if i in mask:
                events.push(TimelineEvent(t, EventKind.GATE, i, block=k, partner=i + blk.delay))
        previous_delay = blk.delay

    n_events = len(events)
    timeline = events.drain()
    logger.debug(
        "emulated %d events over %d blocks (%s)",
        n_events, len(configs), ",".join(c.chirality.value for c in configs),
    )
    return timeline


def gate_sequence(events: Iterable[TimelineEvent]) -> list[Edge]:
    """按时间顺序取出所有 Gate 事件"""
    return [(e.slot, e.partner) for e in events if e.kind is EventKind.GATE]


def format_trace(events: Iterable[TimelineEvent]) -> str:
    """每行一个事件：t=<rational> kind=<Kind> args=<k=v,...>"""
    lines = [e.format() for e in events]
    return "\n".join(lines) + ("\n" if lines else "")

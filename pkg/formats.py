"""
文件格式：图规格 JSON、调度 JSON、分布矩阵 CSV、Graphviz DOT、事件轨迹
"""
import csv
import io
import json
import logging
from pathlib import Path
from typing import Iterable, Optional

from pydantic import ValidationError

from compiler import Schedule
from emulator import TimelineEvent, format_trace
from exceptions import InvalidFamilyError, SpecParseError
from representation import ClusterGraph, DistributionMatrix, FamilySpec, build_family
from utils import write_atomic

logger = logging.getLogger(__name__)


# ---------- 读取 ----------
def _read_text(path: str | Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise SpecParseError(f"Cannot read {path}: {e}") from e


def _family_of(data: dict) -> FamilySpec:
    family = str(data["family"])
    params = data.get("params")
    if params is None:
        return FamilySpec.parse(family)
    if not isinstance(params, list):
        raise InvalidFamilyError(f"params must be a list, got {params!r}")
    return FamilySpec.parse(f"{family}:{','.join(str(p) for p in params)}")


def load_graph_spec(path: str | Path) -> tuple[ClusterGraph, Optional[FamilySpec]]:
    """
    读取图规格，支持两种写法：

        {"n_slots": N, "excited": [...], "edges": [[i, j], ...]}
        {"family": "tcs", "params": [2, 3]}  或  {"family": "tcs:2,3"}

    态族写法同时返回 FamilySpec，供 layer / lattice pass 使用。
    """
    text = _read_text(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecParseError(f"Malformed graph spec {path}: {e}") from e
    try:
        if isinstance(data, dict) and "family" in data:
            spec = _family_of(data)
            return build_family(spec), spec
        return ClusterGraph.model_validate(data), None
    except InvalidFamilyError as e:
        raise SpecParseError(f"Malformed graph spec {path}: {e}") from e
    except ValidationError as e:
        raise SpecParseError(f"Malformed graph spec {path}: {e.error_count()} error(s)\n{e}") from e


def load_graph(path: str | Path) -> ClusterGraph:
    return load_graph_spec(path)[0]


def load_schedule(path: str | Path) -> Schedule:
    try:
        return Schedule.model_validate_json(_read_text(path))
    except ValidationError as e:
        raise SpecParseError(f"Malformed schedule {path}: {e.error_count()} error(s)\n{e}") from e


# ---------- 写出 ----------
def schedule_json(schedule: Schedule) -> str:
    return schedule.model_dump_json(indent=2) + "\n"


def save_schedule(schedule: Schedule, path: str | Path) -> Path:
    return write_atomic(path, schedule_json(schedule))


def save_graph(graph: ClusterGraph, path: str | Path) -> Path:
    return write_atomic(path, graph.model_dump_json(indent=2) + "\n")


def matrix_csv(D: DistributionMatrix) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in D.bits:
        writer.writerow(int(b) for b in row)
    return buf.getvalue()


def schedule_dot(schedule: Schedule, name: str = "schedule") -> str:
    """激发槽实心填充，虚节点虚线；边标签为延迟因子"""
    excited = set(schedule.excitation_set)
    lines = [f"graph {name} {{", "  node [shape=circle];"]
    for i in range(1, schedule.n_slots + 1):
        style = "filled" if i in excited else "dashed"
        lines.append(f"  {i} [style={style}];")
    for i, j in schedule.gates():
        lines.append(f'  {i} -- {j} [label="{j - i}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_trace(events: Iterable[TimelineEvent], path: str | Path) -> Path:
    return write_atomic(path, format_trace(events))


def rows_csv(header: list[str], rows: Iterable[Iterable]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()

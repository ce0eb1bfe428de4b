"""测试文件格式读写"""
import json

import pytest

from compiler import compile_naive
from emulator import emulate
from exceptions import SpecParseError
from formats import (
    load_graph,
    load_graph_spec,
    load_schedule,
    matrix_csv,
    rows_csv,
    save_graph,
    save_schedule,
    schedule_dot,
    schedule_json,
    write_trace,
)
from representation import FamilySpec, build_family


def test_schedule_round_trip(golden_schedule, tmp_path):
    """调度 JSON 写出再读入逐字节一致"""
    path = save_schedule(golden_schedule, tmp_path / "golden.schedule.json")
    loaded = load_schedule(path)
    assert loaded == golden_schedule
    assert schedule_json(loaded) == path.read_text(encoding="utf-8")


def test_graph_round_trip(tmp_path):
    graph = build_family(FamilySpec.parse("lattice:2,2"))
    path = save_graph(graph, tmp_path / "grid.json")
    assert load_graph(path) == graph


@pytest.mark.parametrize("payload", [
    {"family": "tcs", "params": [2, 3]},
    {"family": "TCS:2,3"},
])
def test_family_form_graph_spec(payload, tmp_path):
    """态族写法与显式写法得到同一张图，并带回 FamilySpec"""
    path = tmp_path / "fam.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    graph, spec = load_graph_spec(path)
    assert spec == FamilySpec.parse("tcs:2,3")
    assert graph == build_family(spec)
    assert load_graph(path) == graph


def test_explicit_graph_spec_has_no_family(tmp_path):
    path = save_graph(build_family(FamilySpec.parse("linear:3")), tmp_path / "path.json")
    assert load_graph_spec(path)[1] is None


@pytest.mark.parametrize("payload", [
    {"family": "tcs", "params": [1, 3]},
    {"family": "tcs", "params": 3},
    {"family": "ring", "params": [4]},
])
def test_bad_family_form(payload, tmp_path):
    path = tmp_path / "fam.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    with pytest.raises(SpecParseError):
        load_graph(path)


def test_load_errors(tmp_path):
    """文件不存在或内容非法都转成 SpecParseError"""
    with pytest.raises(SpecParseError):
        load_schedule(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text('{"n_slots": 2, "excitation_set": [1, 3]}', encoding="utf-8")
    with pytest.raises(SpecParseError):
        load_schedule(bad)
    bad.write_text("not json", encoding="utf-8")
    with pytest.raises(SpecParseError):
        load_graph(bad)


def test_matrix_csv():
    D = compile_naive(build_family(FamilySpec.parse("linear:3"))).distribution()
    assert matrix_csv(D) == "1,1,0\n0,1,1\n0,0,1\n"


def test_schedule_dot(golden_schedule):
    """激发槽实心，虚节点虚线，边标签为延迟"""
    dot = schedule_dot(golden_schedule, name="golden")
    assert dot.startswith("graph golden {")
    assert "  1 [style=filled];" in dot
    assert "  2 [style=dashed];" in dot
    assert '  1 -- 8 [label="7"];' in dot
    assert '  7 -- 8 [label="1"];' in dot
    assert dot.count(" -- ") == 14


def test_write_trace(golden_schedule, tmp_path):
    events = emulate(golden_schedule)
    path = write_trace(events, tmp_path / "trace" / "golden.trace")
    assert len(path.read_text(encoding="utf-8").splitlines()) == len(events)


def test_rows_csv():
    assert rows_csv(["a", "b"], [(1, 2), ("x", 0.5)]) == "a,b\n1,2\nx,0.5\n"

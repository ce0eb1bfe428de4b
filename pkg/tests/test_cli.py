"""测试命令行入口与退出码"""
import json

import pytest
from typer.testing import CliRunner

from formats import load_schedule
from tdf_cluster import EXIT_INFEASIBLE, EXIT_INPUT_ERROR, EXIT_OK, EXIT_VERIFY_FAILED, app

runner = CliRunner()


@pytest.fixture
def broken_schedule(golden_path, tmp_path):
    """去掉原生门 7 的金标准调度"""
    data = json.loads(golden_path.read_text(encoding="utf-8"))
    data["native_chain_gates"].remove(7)
    path = tmp_path / "broken.schedule.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


# ---------- generate ----------
def test_generate_lattice(tmp_path):
    """二叉树格点嵌入：写出三个文件，只有一个延迟 7 的 TDF"""
    result = runner.invoke(
        app, ["generate", "--family", "tcs:2,4", "--pass", "lattice", "--out", str(tmp_path), "--no-cache"]
    )
    assert result.exit_code == EXIT_OK, result.output
    schedule = load_schedule(tmp_path / "tcs_2-4.lattice.schedule.json")
    assert schedule.delays == (7,)
    assert (tmp_path / "tcs_2-4.lattice.matrix.csv").exists()
    assert "label=\"7\"" in (tmp_path / "tcs_2-4.lattice.dot").read_text(encoding="utf-8")


def test_generate_linear_csv(tmp_path):
    """1D 簇态不需要 TDF；csv 格式直接打印分布矩阵"""
    result = runner.invoke(
        app, ["generate", "--family", "linear:5", "--out", str(tmp_path), "--format", "csv", "--no-cache"]
    )
    assert result.exit_code == EXIT_OK, result.output
    assert "1,1,0,0,0" in result.output
    assert "0,0,0,0,1" in result.output
    assert load_schedule(tmp_path / "linear_5.naive.schedule.json").blocks == ()


def test_generate_infeasible(tmp_path):
    """F(2,6) < 0：退出码 3 并给出 F 的值"""
    result = runner.invoke(
        app, ["generate", "--family", "tcs:2,6", "--pass", "lattice", "--out", str(tmp_path), "--no-cache"]
    )
    assert result.exit_code == EXIT_INFEASIBLE
    assert "F(2,6) = -2" in result.output


@pytest.mark.parametrize("args", [
    ["generate", "--family", "tcs:1,3", "--no-cache"],
    ["generate", "--no-cache"],
    ["generate", "--family", "linear:4", "--pass", "layer", "--no-cache"],
    ["fidelity", "--family", "linear:3", "--gamma", "1.5", "--no-cache"],
])
def test_input_errors(args, tmp_path):
    """非法输入统一返回退出码 2"""
    result = runner.invoke(app, args + ["--out", str(tmp_path / "out")])
    assert result.exit_code == EXIT_INPUT_ERROR


def test_graph_file_input(tmp_path):
    """--graph 读取 JSON 图规格"""
    graph = tmp_path / "ring.json"
    graph.write_text(
        json.dumps({"n_slots": 4, "excited": [1, 2, 3, 4], "edges": [[1, 2], [2, 3], [3, 4], [1, 4]]}),
        encoding="utf-8",
    )
    result = runner.invoke(app, ["generate", "--graph", str(graph), "--out", str(tmp_path), "--no-cache"])
    assert result.exit_code == EXIT_OK, result.output
    assert load_schedule(tmp_path / "ring.naive.schedule.json").delays == (3,)


def test_family_form_graph_file(tmp_path):
    """态族写法的图文件也能走 lattice pass"""
    graph = tmp_path / "fam.json"
    graph.write_text(json.dumps({"family": "tcs", "params": [2, 3]}), encoding="utf-8")
    result = runner.invoke(
        app, ["generate", "--graph", str(graph), "--pass", "lattice", "--out", str(tmp_path), "--no-cache"]
    )
    assert result.exit_code == EXIT_OK, result.output
    assert load_schedule(tmp_path / "fam.lattice.schedule.json").delays == (5,)


def test_malformed_graph_file(tmp_path):
    graph = tmp_path / "bad.json"
    graph.write_text('{"n_slots": 2, "excited": [1], "edges": [[1, 2]]}', encoding="utf-8")
    result = runner.invoke(app, ["generate", "--graph", str(graph), "--out", str(tmp_path), "--no-cache"])
    assert result.exit_code == EXIT_INPUT_ERROR


# ---------- optimize ----------
def test_optimize_writes_search_schedule(tmp_path):
    result = runner.invoke(
        app, ["optimize", "--family", "tcs:2,3", "--budget", "300", "--out", str(tmp_path), "--no-cache"]
    )
    assert result.exit_code == EXIT_OK, result.output
    schedule = load_schedule(tmp_path / "tcs_2-3.search.schedule.json")
    assert len(schedule.blocks) <= 2
    assert schedule.provenance.pass_name == "search"


# ---------- verify ----------
def test_verify_golden(golden_path, tmp_path):
    report_path = tmp_path / "report.json"
    result = runner.invoke(
        app, ["verify", "--schedule", str(golden_path), "--family", "tcs:2,4", "--out", str(report_path)]
    )
    assert result.exit_code == EXIT_OK, result.output
    report = json.loads(report_path.read_text(encoding="utf-8"))
    assert report["verdict"] is True
    assert report["missing"] == []


def test_verify_reports_missing_edge(broken_schedule):
    """少一个门：退出码 1，并打印缺失的边"""
    result = runner.invoke(app, ["verify", "--schedule", str(broken_schedule), "--family", "tcs:2,4"])
    assert result.exit_code == EXIT_VERIFY_FAILED
    assert "missing 7-8" in result.output


def test_verify_empty(tmp_path):
    """空调度对空图"""
    schedule = tmp_path / "empty.schedule.json"
    graph = tmp_path / "empty.json"
    schedule.write_text('{"n_slots": 0}', encoding="utf-8")
    graph.write_text('{"n_slots": 0}', encoding="utf-8")
    result = runner.invoke(app, ["verify", "--schedule", str(schedule), "--graph", str(graph)])
    assert result.exit_code == EXIT_OK, result.output


def test_verify_missing_schedule_file(tmp_path):
    result = runner.invoke(
        app, ["verify", "--schedule", str(tmp_path / "nope.json"), "--family", "linear:3"]
    )
    assert result.exit_code == EXIT_INPUT_ERROR


# ---------- emulate ----------
def test_emulate_trace_file(golden_path, tmp_path):
    trace = tmp_path / "golden.trace"
    result = runner.invoke(app, ["emulate", "--schedule", str(golden_path), "--out", str(trace)])
    assert result.exit_code == EXIT_OK, result.output
    lines = trace.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "t=1 kind=Emit args=slot=1"
    assert sum(1 for line in lines if "kind=Gate" in line) == 14


def test_emulate_stdout(golden_path):
    result = runner.invoke(app, ["emulate", "--schedule", str(golden_path)])
    assert result.exit_code == EXIT_OK
    assert "t=8 kind=Gate args=i=1,j=8,block=1" in result.output


# ---------- fidelity / table2 ----------
def test_fidelity_csv():
    """小规模态附带精确阻尼保真度"""
    result = runner.invoke(app, ["fidelity", "--family", "linear:3", "--format", "csv", "--no-cache"])
    assert result.exit_code == EXIT_OK, result.output
    keys = [line.split(",")[0] for line in result.output.splitlines()]
    assert keys[0] == "key"
    assert "f_c" in keys
    assert "exact_damped" in keys


def test_fidelity_overridden_damping_has_no_oracle():
    """--damping-factor 与 γ 不一致时不报告精确阻尼"""
    result = runner.invoke(
        app, ["fidelity", "--family", "linear:3", "--damping-factor", "0.9", "--format", "csv", "--no-cache"]
    )
    assert result.exit_code == EXIT_OK, result.output
    keys = [line.split(",")[0] for line in result.output.splitlines()]
    assert "log10_f_c" in keys
    assert "exact_damped" not in keys


def test_table2_csv(tmp_path):
    out = tmp_path / "table2.csv"
    result = runner.invoke(app, ["table2", "--format", "csv", "--out", str(out)])
    assert result.exit_code == EXIT_OK, result.output
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "state,N,n_tdf,f_c"
    assert len(lines) == 16
    rows = {}
    for line in lines[1:]:
        state, n, n_tdf, f_c = line.split(",")
        rows[(state, int(n))] = (int(n_tdf), float(f_c))
    assert rows[("TCS_initial", 15)][0] == 7
    assert rows[("TCS_initial", 15)][1] == pytest.approx(0.1512, abs=1e-3)
    assert rows[("TCS_optimized", 7)] == (1, pytest.approx(0.9694, abs=5e-4))
    assert rows[("CCS", 31)][1] == pytest.approx(1.947e-9, rel=1e-2)


def test_table2_text():
    result = runner.invoke(app, ["table2"])
    assert result.exit_code == EXIT_OK
    assert "TCS_optimized" in result.output

"""测试稳定子模拟、规范形与稠密态矢量对照"""
import random

import pytest

from compiler import Schedule, compile_lattice_embedded, compile_naive
from exceptions import IndexOutOfRangeError, NotGraphStateError, TooLargeError
from representation import ClusterGraph, FamilySpec, build_family
from stabilizer import (
    StabilizerTableau,
    apply_cz,
    check_invariants,
    dense_fidelity,
    dense_from_gates,
    dense_graph_state,
    dense_oracle,
    extract_graph,
    prepare_plus,
    run_gates,
    run_schedule,
    states_equal,
    tableau_to_dense,
    verify_schedule,
)


def random_circuit(rng: random.Random, n: int) -> tuple[list[int], list[tuple[int, int]]]:
    excited = [i for i in range(1, n + 1) if rng.random() < 0.8]
    gates = []
    if len(excited) >= 2:
        for _ in range(rng.randint(0, 12)):
            i, j = rng.sample(excited, 2)
            gates.append((i, j))
    return excited, gates


# ---------- 基本操作 ----------
def test_prepare_plus():
    """激发槽由 X 稳定，虚节点由 Z 稳定"""
    t = prepare_plus({1, 3}, 3)
    assert t.pauli_strings() == ["+XII", "+IZI", "+IIX"]
    check_invariants(t)


def test_prepare_plus_out_of_range():
    with pytest.raises(IndexOutOfRangeError):
        prepare_plus({4}, 3)


def test_single_cz():
    """|++⟩ 上的 CZ 得到 XZ、ZX"""
    t = apply_cz(prepare_plus({1, 2}, 2), 1, 2)
    assert t.pauli_strings() == ["+XZ", "+ZX"]


def test_cz_is_involution():
    """CZ 两次回到原表（逐位相同）"""
    t = prepare_plus({1, 2, 3}, 3)
    twice = apply_cz(apply_cz(t, 1, 3), 1, 3)
    assert twice == t
    assert hash(twice) == hash(t)


def test_cz_rejects_bad_pairs():
    t = prepare_plus({1, 2}, 2)
    with pytest.raises(IndexOutOfRangeError):
        apply_cz(t, 1, 3)
    with pytest.raises(ValueError):
        apply_cz(t, 2, 2)


def test_path_stabilizers():
    """三比特路径图：XZI、ZXZ、IZX"""
    t = run_gates({1, 2, 3}, 3, [(1, 2), (2, 3)])
    assert t.pauli_strings() == ["+XZI", "+ZXZ", "+IZX"]


def test_cz_on_vacuum_is_identity():
    """虚节点处于 |0⟩，CZ 不改变整体态"""
    t = apply_cz(prepare_plus({1}, 2), 1, 2)
    assert states_equal(t, prepare_plus({1}, 2))
    graph = extract_graph(t)
    assert graph.excited == (1,)
    assert graph.edges == ()


# ---------- 读图 ----------
def test_golden_schedule_extracts_tree(golden_schedule, golden_edges):
    """金标准调度生成深度 4 的二叉树"""
    graph = extract_graph(run_schedule(golden_schedule), golden_schedule.excitation_set)
    assert set(graph.edges) == golden_edges
    assert graph.degree_sequence() == [1] * 8 + [2] + [3] * 6
    assert graph.virtual == tuple(i for i in range(1, 32) if i not in golden_schedule.excitation_set)


def test_golden_schedule_verifies(golden_schedule):
    report = verify_schedule(golden_schedule, build_family(FamilySpec.parse("tcs:2,4")))
    assert report.verdict
    assert report.isomorphic
    assert report.missing == () and report.extra == ()


def test_compiled_lattice_verifies_like_golden(golden_schedule):
    """编译器自己的嵌入与金标准是同一个态"""
    compiled = compile_lattice_embedded(2, 4)
    assert states_equal(run_schedule(compiled), run_schedule(golden_schedule))


def test_missing_gate_is_reported(golden_schedule):
    """去掉一个原生门后报告缺失的边"""
    data = golden_schedule.model_dump()
    data["native_chain_gates"] = [i for i in data["native_chain_gates"] if i != 7]
    broken = Schedule.model_validate(data)
    report = verify_schedule(broken, build_family(FamilySpec.parse("tcs:2,4")))
    assert not report.verdict
    assert report.missing == ((7, 8),)
    assert report.extra == ()
    assert not report.isomorphic


def test_extra_gate_is_reported():
    """多出来的边与缺失的边分别报告"""
    schedule = Schedule(n_slots=3, excitation_set=[1, 2, 3], native_chain_gates=[1, 2])
    assert verify_schedule(schedule, build_family(FamilySpec.parse("linear:3"))).verdict

    single = ClusterGraph(n_slots=3, excited=[1, 2, 3], edges=[(1, 2)])
    report = verify_schedule(schedule, single)
    assert report.extra == ((2, 3),)
    assert report.missing == ()
    assert not report.verdict

    report = verify_schedule(schedule, build_family(FamilySpec.parse("ccs:3")))
    assert report.missing == ((1, 3),)
    assert report.extra == ()


def test_empty_schedule_against_empty_graph():
    """空调度对空图通过验证"""
    assert verify_schedule(Schedule(n_slots=0), ClusterGraph(n_slots=0)).verdict


def test_not_graph_state():
    """负号或多比特 X 支撑都不是图态"""
    minus = StabilizerTableau(n=1, x_bits=[[1]], z_bits=[[0]], signs=[1])
    with pytest.raises(NotGraphStateError):
        extract_graph(minus)
    bell = StabilizerTableau(n=2, x_bits=[[1, 1], [0, 0]], z_bits=[[0, 0], [1, 1]], signs=[0, 0])
    with pytest.raises(NotGraphStateError):
        extract_graph(bell)


def test_excited_mismatch_is_reported():
    t = run_gates({1, 2}, 3, [(1, 2)])
    with pytest.raises(NotGraphStateError):
        extract_graph(t, excited={1, 2, 3})


def test_anticommuting_generators():
    bad = StabilizerTableau(n=2, x_bits=[[1, 0], [0, 0]], z_bits=[[0, 0], [1, 0]], signs=[0, 0])
    with pytest.raises(ValueError):
        check_invariants(bad)


def test_states_equal_needs_same_size():
    with pytest.raises(ValueError):
        states_equal(prepare_plus({1}, 1), prepare_plus({1}, 2))


# ---------- 稠密对照 ----------
def test_random_circuits_match_dense_oracle():
    """200 个随机 CZ 线路：稳定子与稠密两条管线一致"""
    rng = random.Random(2024)
    for _ in range(200):
        n = rng.randint(1, 8)
        excited, gates = random_circuit(rng, n)
        tableau = run_gates(excited, n, gates)
        dense = dense_from_gates(excited, n, gates)
        assert dense_fidelity(dense, tableau_to_dense(tableau)) == pytest.approx(1.0, abs=1e-10)


def test_states_equal_agrees_with_dense_fidelity():
    """states_equal 为真当且仅当两个稠密态的保真度为 1"""
    rng = random.Random(7)
    for _ in range(200):
        n = rng.randint(2, 6)
        excited = list(range(1, n + 1))
        gates_a = [tuple(rng.sample(excited, 2)) for _ in range(rng.randint(0, 4))]
        gates_b = [tuple(rng.sample(excited, 2)) for _ in range(rng.randint(0, 4))]
        same = states_equal(run_gates(excited, n, gates_a), run_gates(excited, n, gates_b))
        overlap = dense_fidelity(dense_from_gates(excited, n, gates_a), dense_from_gates(excited, n, gates_b))
        assert same == (overlap > 1 - 1e-10)


def test_dense_oracle_matches_graph_state():
    """naive 调度的振幅级模拟等于目标图态"""
    graph = build_family(FamilySpec.parse("tcs:2,3"))
    schedule = compile_naive(graph)
    assert dense_fidelity(dense_oracle(schedule), dense_graph_state(graph)) == pytest.approx(1.0, abs=1e-12)
    other = build_family(FamilySpec.parse("linear:7"))
    assert dense_fidelity(dense_oracle(schedule), dense_graph_state(other)) < 1.0 - 1e-6


def test_dense_limits():
    """超出稠密模拟上限时报错"""
    with pytest.raises(TooLargeError):
        dense_from_gates(range(1, 14), 13, [])
    with pytest.raises(TooLargeError):
        tableau_to_dense(prepare_plus(range(1, 14), 13))


def test_packed_rows_distinguish_states():
    """打包后的字节串可直接用于比较"""
    a = run_gates({1, 2, 3}, 3, [(1, 2)])
    b = run_gates({1, 2, 3}, 3, [(2, 3)])
    assert a.packed() != b.packed()
    assert len({a, b, run_gates({1, 2, 3}, 3, [(1, 2)])}) == 2

#!/usr/bin/env python3
"""
TDF 簇态编译器 CLI
编译、验证、时间线仿真与保真度估计
"""
from __future__ import annotations

import json
from contextlib import contextmanager
from enum import Enum
from pathlib import Path
from typing import Iterator, Optional

import typer
from pydantic import BaseModel, ValidationError
from rich.console import Console
from rich.table import Table

from compiler import (
    PASSES,
    Schedule,
    compile_family,
    compile_naive,
    minimize_delay_classes,
    tdf_count_report,
)
from config import (
    DEFAULT_FS,
    DEFAULT_FT,
    DEFAULT_GAMMA,
    DEFAULT_SEED,
    OUTPUT_DIR,
    SEARCH_BUDGET,
    TABLE2_DAMPING_FACTOR,
)
from emulator import emulate, format_trace, gate_sequence
from exceptions import (
    ClusterToolkitError,
    EmbeddingInfeasibleError,
    RepresentationError,
    ScheduleError,
    SpecParseError,
    TooLargeError,
)
from formats import (
    load_graph_spec,
    load_schedule,
    matrix_csv,
    rows_csv,
    save_schedule,
    schedule_dot,
    write_trace,
)
from noise import NoiseParams, fidelity_estimate, gamma_readings, table2_rows
from representation import ClusterGraph, FamilySpec, build_family
from stabilizer import run_gates, run_schedule, states_equal, verify_schedule
from utils import get_default_cache, setup_logger, write_atomic

logger = setup_logger()
console = Console()

# ---------- 退出码 ----------
EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INPUT_ERROR = 2
EXIT_INFEASIBLE = 3


class Command(str, Enum):
    GENERATE = "generate"
    OPTIMIZE = "optimize"
    VERIFY = "verify"
    EMULATE = "emulate"
    FIDELITY = "fidelity"
    TABLE2 = "table2"


class OutputFormat(str, Enum):
    TEXT = "text"
    CSV = "csv"
    DOT = "dot"


# ---------- 运行配置 ----------
class RunConfig(BaseModel):
    """一次命令调用的全部输入"""

    command: Command
    family: Optional[str] = None
    graph_path: Optional[Path] = None
    schedule_path: Optional[Path] = None
    pass_name: str = "naive"
    budget: int = SEARCH_BUDGET
    seed: int = DEFAULT_SEED
    noise: Optional[NoiseParams] = None
    out: Optional[Path] = None
    fmt: OutputFormat = OutputFormat.TEXT
    use_cache: bool = True

    def target(self) -> tuple[ClusterGraph, Optional[FamilySpec]]:
        """--family 与 --graph 恰好给出一个"""
        if (self.family is None) == (self.graph_path is None):
            raise SpecParseError("Give exactly one of --family or --graph")
        if self.family is not None:
            spec = FamilySpec.parse(self.family)
            return build_family(spec), spec
        return load_graph_spec(self.graph_path)

    def label(self) -> str:
        if self.family is not None:
            return self.family.replace(":", "_").replace(",", "-")
        if self.graph_path is not None:
            return self.graph_path.stem
        return "run"

    def cache(self):
        return get_default_cache() if self.use_cache else None


@contextmanager
def _exit_codes() -> Iterator[None]:
    """把异常映射为约定的退出码"""
    try:
        yield
    except EmbeddingInfeasibleError as e:
        console.print(f"[red]❌ 无法嵌入: {e}[/]")
        raise typer.Exit(EXIT_INFEASIBLE)
    except (SpecParseError, RepresentationError, ScheduleError, TooLargeError) as e:
        console.print(f"[red]❌ 输入错误: {e}[/]")
        raise typer.Exit(EXIT_INPUT_ERROR)
    except ValidationError as e:
        console.print(f"[red]❌ 输入校验失败（{e.error_count()} 处）[/]")
        logger.debug("Validation error: %s", e)
        raise typer.Exit(EXIT_INPUT_ERROR)
    except ClusterToolkitError as e:
        console.print(f"[red]❌ {e}[/]")
        raise typer.Exit(EXIT_INPUT_ERROR)


def _summary_table(title: str, schedule: Schedule) -> Table:
    counts = tdf_count_report(schedule)
    table = Table(title=title)
    table.add_column("字段", style="cyan")
    table.add_column("值", overflow="fold")
    table.add_row("pass", schedule.provenance.pass_name)
    table.add_row("时间槽", str(schedule.n_slots))
    table.add_row("激发数", str(len(schedule.excitation_set)))
    table.add_row("原生门", str(len(schedule.native_chain_gates)))
    table.add_row("TDF 延迟", ", ".join(map(str, schedule.delays)) or "-")
    table.add_row("延迟类总数 / 额外 TDF", f"{counts.total_classes} / {counts.additional_tdfs}")
    return table


def _write_schedule_outputs(cfg: RunConfig, schedule: Schedule, stem: str) -> Path:
    out_dir = cfg.out or Path(OUTPUT_DIR)
    save_schedule(schedule, out_dir / f"{stem}.schedule.json")
    write_atomic(out_dir / f"{stem}.matrix.csv", matrix_csv(schedule.distribution()))
    write_atomic(out_dir / f"{stem}.dot", schedule_dot(schedule))
    return out_dir


# ---------- 命令实现 ----------
def cmd_generate(cfg: RunConfig) -> int:
    graph, spec = cfg.target()
    with console.status("[bold green]正在编译..."):
        schedule = compile_family(
            graph, cfg.pass_name, family=spec, budget=cfg.budget, seed=cfg.seed, cache=cfg.cache()
        )
    out_dir = _write_schedule_outputs(cfg, schedule, f"{cfg.label()}.{cfg.pass_name}")

    if cfg.fmt is OutputFormat.CSV:
        typer.echo(matrix_csv(schedule.distribution()), nl=False)
    elif cfg.fmt is OutputFormat.DOT:
        typer.echo(schedule_dot(schedule), nl=False)
    else:
        console.print(_summary_table(f"{cfg.label()} · {cfg.pass_name}", schedule))
        console.print(f"[green]✅ 完成！结果已保存至 {out_dir}/ 目录[/]")
    return EXIT_OK


def cmd_optimize(cfg: RunConfig) -> int:
    graph, _ = cfg.target()
    naive = compile_naive(graph)
    with console.status("[bold green]正在搜索编号..."):
        numbering, best = minimize_delay_classes(graph, budget=cfg.budget, seed=cfg.seed, cache=cfg.cache())
    out_dir = _write_schedule_outputs(cfg, best, f"{cfg.label()}.search")

    table = Table(title=f"{cfg.label()} 编号优化（budget={cfg.budget}, seed={cfg.seed}）")
    for col in ["pass", "TDF 延迟", "额外 TDF"]:
        table.add_column(col)
    for s in (naive, best):
        table.add_row(s.provenance.pass_name, ", ".join(map(str, s.delays)) or "-", str(len(s.blocks)))
    console.print(table)
    console.print(f"编号: {list(numbering)}")
    console.print(f"[green]✅ 完成！结果已保存至 {out_dir}/ 目录[/]")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    if cfg.schedule_path is None:
        raise SpecParseError("--schedule is required")
    schedule = load_schedule(cfg.schedule_path)
    target, _ = cfg.target()
    report = verify_schedule(schedule, target)

    # 时间线给出的门序列必须复现同一个态
    events = emulate(schedule)
    emulated = run_gates(schedule.excitation_set, schedule.n_slots, gate_sequence(events))
    timeline_ok = states_equal(emulated, run_schedule(schedule))

    table = Table(title="验证报告")
    table.add_column("项目", style="cyan")
    table.add_column("结果", overflow="fold")
    table.add_row("目标边数", str(len(report.target_edges)))
    table.add_row("实现边数", str(len(report.realized_edges)))
    table.add_row("缺失", " ".join(f"{i}-{j}" for i, j in report.missing) or "-")
    table.add_row("多余", " ".join(f"{i}-{j}" for i, j in report.extra) or "-")
    table.add_row("同构", "是" if report.isomorphic else "否")
    table.add_row("时间线一致", "是" if timeline_ok else "否")
    console.print(table)
    if cfg.out is not None:
        write_atomic(cfg.out, report.model_dump_json(indent=2) + "\n")

    if report.verdict and timeline_ok:
        console.print("[green]✅ 验证通过[/]")
        return EXIT_OK
    for i, j in report.missing:
        typer.echo(f"missing {i}-{j}")
    for i, j in report.extra:
        typer.echo(f"extra {i}-{j}")
    console.print("[red]❌ 验证失败[/]")
    return EXIT_VERIFY_FAILED


def cmd_emulate(cfg: RunConfig) -> int:
    if cfg.schedule_path is None:
        raise SpecParseError("--schedule is required")
    schedule = load_schedule(cfg.schedule_path)
    events = emulate(schedule)
    if cfg.out is not None:
        write_trace(events, cfg.out)
        console.print(f"[green]✅ {len(events)} 个事件已写入 {cfg.out}[/]")
    else:
        typer.echo(format_trace(events), nl=False)
    return EXIT_OK


def cmd_fidelity(cfg: RunConfig) -> int:
    graph, spec = cfg.target()
    schedule = compile_family(graph, cfg.pass_name, family=spec, budget=cfg.budget, seed=cfg.seed, cache=cfg.cache())
    params = cfg.noise or NoiseParams()
    report = fidelity_estimate(schedule.distribution(), len(schedule.blocks), params)

    rows = [
        ("n_h", report.n_h),
        ("n_cz", report.n_cz),
        ("n_tdf", report.n_tdf),
        ("n_damp_ops", report.n_damp_ops),
        ("f_s", params.f_s),
        ("f_t", params.f_t),
        ("gamma", params.gamma),
        ("per_damping_factor", params.per_damping_factor),
        ("gate_h_factor", report.gate_h_factor),
        ("gate_cz_factor", report.gate_cz_factor),
        ("damping_factor", report.damping_factor),
        ("f_c", report.f_c),
        ("log10_f_c", report.log10_f_c),
    ]
    if report.exact_damped is not None:
        rows += [("exact_damped", report.exact_damped), ("product_damped", report.product_damped)]

    if cfg.fmt is OutputFormat.CSV:
        typer.echo(rows_csv(["key", "value"], rows), nl=False)
    else:
        table = Table(title=f"{cfg.label()} · {cfg.pass_name} 保真度")
        table.add_column("项目", style="cyan")
        table.add_column("值")
        for key, value in rows:
            table.add_row(key, f"{value:.6g}" if isinstance(value, float) else str(value))
        console.print(table)

        readings = Table(title="参考 γ = 0.98 的三种读法")
        for col in ["读法", "γ", "F_single"]:
            readings.add_column(col)
        for r in gamma_readings():
            readings.add_row(r.label, f"{r.gamma:.4g}", f"{r.f_single:.4f}")
        console.print(readings)
    if cfg.out is not None:
        write_atomic(cfg.out, report.model_dump_json(indent=2) + "\n")
    return EXIT_OK


def cmd_table2(cfg: RunConfig) -> int:
    params = cfg.noise or NoiseParams.table2()
    rows = table2_rows(params)
    text = rows_csv(["state", "N", "n_tdf", "f_c"], [(r.state, r.n, r.n_tdf, f"{r.f_c:.6g}") for r in rows])
    if cfg.out is not None:
        write_atomic(cfg.out, text)
    if cfg.fmt is OutputFormat.CSV:
        typer.echo(text, nl=False)
        return EXIT_OK

    table = Table(title=f"TCS / CCS 保真度（f_s={params.f_s}, f_t={params.f_t}, A={params.per_damping_factor}）")
    for col in ["态", "N", "n_tdf", "f_c"]:
        table.add_column(col)
    for r in rows:
        table.add_row(r.state, str(r.n), str(r.n_tdf), f"{r.f_c:.4g}")
    console.print(table)
    return EXIT_OK


_COMMANDS = {
    Command.GENERATE: cmd_generate,
    Command.OPTIMIZE: cmd_optimize,
    Command.VERIFY: cmd_verify,
    Command.EMULATE: cmd_emulate,
    Command.FIDELITY: cmd_fidelity,
    Command.TABLE2: cmd_table2,
}


def run(cfg: RunConfig) -> None:
    """执行命令并以约定退出码退出"""
    logger.debug("Running %s", json.dumps(cfg.model_dump(mode="json"), sort_keys=True))
    with _exit_codes():
        code = _COMMANDS[cfg.command](cfg)
    if code:
        raise typer.Exit(code)


def _noise(fs: float, ft: float, gamma: float, damping: Optional[float]) -> NoiseParams:
    return NoiseParams(f_s=fs, f_t=ft, gamma=gamma, per_damping_factor=damping)


# ---------- CLI ----------
app = typer.Typer(help="TDF 光子簇态编译器：生成、优化、验证、仿真与保真度估计")

FAMILY_HELP = "态族，如 linear:5 / ccs:4 / tcs:2,4 / lattice:3,3"


@app.command()
def generate(
    family: Optional[str] = typer.Option(None, "--family", help=FAMILY_HELP),
    graph: Optional[Path] = typer.Option(None, "--graph", help="图规格 JSON 文件"),
    pass_name: str = typer.Option("naive", "--pass", help=f"编译 pass：{' / '.join(PASSES)}"),
    budget: int = typer.Option(SEARCH_BUDGET, help="局部搜索迭代预算"),
    seed: int = typer.Option(DEFAULT_SEED, help="随机种子"),
    out: Optional[Path] = typer.Option(None, "--out", help="输出目录"),
    fmt: OutputFormat = typer.Option(OutputFormat.TEXT, "--format", help="标准输出格式"),
    no_cache: bool = typer.Option(False, "--no-cache", help="不读写编译缓存"),
) -> None:
    """把目标图编译成 TDF 调度，写出调度 JSON、分布矩阵 CSV 与 DOT"""
    with _exit_codes():
        cfg = RunConfig(
            command=Command.GENERATE, family=family, graph_path=graph, pass_name=pass_name,
            budget=budget, seed=seed, out=out, fmt=fmt, use_cache=not no_cache,
        )
    run(cfg)


@app.command()
def optimize(
    family: Optional[str] = typer.Option(None, "--family", help=FAMILY_HELP),
    graph: Optional[Path] = typer.Option(None, "--graph", help="图规格 JSON 文件"),
    budget: int = typer.Option(SEARCH_BUDGET, help="局部搜索迭代预算"),
    seed: int = typer.Option(DEFAULT_SEED, help="随机种子"),
    out: Optional[Path] = typer.Option(None, "--out", help="输出目录"),
    no_cache: bool = typer.Option(False, "--no-cache", help="不读写编译缓存"),
) -> None:
    """局部搜索编号，对比 naive 与最优结果"""
    with _exit_codes():
        cfg = RunConfig(
            command=Command.OPTIMIZE, family=family, graph_path=graph, pass_name="search",
            budget=budget, seed=seed, out=out, use_cache=not no_cache,
        )
    run(cfg)


@app.command()
def verify(
    schedule: Path = typer.Option(..., "--schedule", help="调度 JSON 文件"),
    family: Optional[str] = typer.Option(None, "--family", help=FAMILY_HELP),
    graph: Optional[Path] = typer.Option(None, "--graph", help="图规格 JSON 文件"),
    out: Optional[Path] = typer.Option(None, "--out", help="验证报告 JSON"),
) -> None:
    """用稳定子模拟检查调度是否恰好生成目标图"""
    with _exit_codes():
        cfg = RunConfig(command=Command.VERIFY, family=family, graph_path=graph, schedule_path=schedule, out=out)
    run(cfg)


@app.command("emulate")
def emulate_cmd(
    schedule: Path = typer.Option(..., "--schedule", help="调度 JSON 文件"),
    out: Optional[Path] = typer.Option(None, "--out", help="轨迹输出文件，缺省打印到标准输出"),
) -> None:
    """导出物理时间线事件轨迹"""
    with _exit_codes():
        cfg = RunConfig(command=Command.EMULATE, schedule_path=schedule, out=out)
    run(cfg)


@app.command()
def fidelity(
    family: Optional[str] = typer.Option(None, "--family", help=FAMILY_HELP),
    graph: Optional[Path] = typer.Option(None, "--graph", help="图规格 JSON 文件"),
    pass_name: str = typer.Option("naive", "--pass", help=f"编译 pass：{' / '.join(PASSES)}"),
    fs: float = typer.Option(DEFAULT_FS, "--fs", help="单比特门保真度 F_S"),
    ft: float = typer.Option(DEFAULT_FT, "--ft", help="双比特门过程保真度 F_T"),
    gamma: float = typer.Option(DEFAULT_GAMMA, "--gamma", help="振幅阻尼概率 γ"),
    damping: Optional[float] = typer.Option(None, "--damping-factor", help="每次阻尼的保真度因子，缺省由 γ 推出"),
    fmt: OutputFormat = typer.Option(OutputFormat.TEXT, "--format", help="text 或 csv"),
    out: Optional[Path] = typer.Option(None, "--out", help="报告 JSON"),
    no_cache: bool = typer.Option(False, "--no-cache", help="不读写编译缓存"),
) -> None:
    """闭式保真度估计，小规模时附带精确阻尼保真度"""
    with _exit_codes():
        cfg = RunConfig(
            command=Command.FIDELITY, family=family, graph_path=graph, pass_name=pass_name,
            noise=_noise(fs, ft, gamma, damping), fmt=fmt, out=out, use_cache=not no_cache,
        )
    run(cfg)


@app.command()
def table2(
    fs: float = typer.Option(DEFAULT_FS, "--fs", help="单比特门保真度 F_S"),
    ft: float = typer.Option(DEFAULT_FT, "--ft", help="双比特门过程保真度 F_T"),
    damping: float = typer.Option(TABLE2_DAMPING_FACTOR, "--damping-factor", help="每次阻尼的保真度因子"),
    fmt: OutputFormat = typer.Option(OutputFormat.TEXT, "--format", help="text 或 csv"),
    out: Optional[Path] = typer.Option(None, "--out", help="CSV 输出文件"),
) -> None:
    """TCS（初始 / 优化）与 CCS 在 d = 1…5 时的保真度"""
    with _exit_codes():
        cfg = RunConfig(
            command=Command.TABLE2, noise=_noise(fs, ft, DEFAULT_GAMMA, damping), fmt=fmt, out=out,
        )
    run(cfg)


if __name__ == "__main__":
    app()

"""
噪声与保真度：振幅阻尼信道、环形器模型、闭式保真度估计与稠密密度矩阵验证

约定：本模块的 qubit 下标从 0 开始，对应密度矩阵张量的第 q 个轴（大端序）。
"""
from __future__ import annotations

import logging
import math
from decimal import Decimal
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from compiler import compile_lattice_embedded, compile_naive
from config import (
    DEFAULT_FS,
    DEFAULT_FT,
    DEFAULT_GAMMA,
    DENSITY_MAX_QUBITS,
    NORM_TOL,
    ORACLE_MAX_QUBITS,
    PSD_TOL,
    TABLE2_DAMPING_FACTOR,
)
from exceptions import NoiseModelError, NotPositiveError, OutOfRangeError, TooLargeError
from representation import (
    ClusterGraph,
    DistributionMatrix,
    FamilyKind,
    FamilySpec,
    build_family,
    delay_classes,
    gate_counts,
    graph_of,
)
from stabilizer import dense_graph_state

logger = logging.getLogger(__name__)


# ---------- 参数与结果 ----------
def single_photon_fidelity(gamma: float) -> float:
    """|+⟩ 经一次振幅阻尼后的保真度 (1+√(1−γ))/2"""
    if not 0.0 <= gamma < 1.0:
        raise OutOfRangeError(f"gamma must lie in [0, 1), got {gamma}")
    return (1.0 + math.sqrt(1.0 - gamma)) / 2.0


def damping_fidelity(n: int, gamma: float) -> float:
    """单光子贡献的乘积 F_single^n"""
    return single_photon_fidelity(gamma) ** n


class NoiseParams(BaseModel):
    """per_damping_factor 缺省时由 gamma 推出，也可显式覆盖"""

    model_config = ConfigDict(frozen=True)

    f_s: float = DEFAULT_FS
    f_t: float = DEFAULT_FT
    gamma: float = DEFAULT_GAMMA
    per_damping_factor: float

    @model_validator(mode="before")
    @classmethod
    def _derive_damping(cls, data):
        if isinstance(data, dict) and data.get("per_damping_factor") is None:
            gamma = float(data.get("gamma", DEFAULT_GAMMA))
            if not 0.0 <= gamma < 1.0:
                raise ValueError(f"gamma must lie in [0, 1), got {gamma}")
            data = dict(data)
            data["per_damping_factor"] = single_photon_fidelity(gamma)
        return data

    @model_validator(mode="after")
    def _check_ranges(self) -> "NoiseParams":
        for name in ("f_s", "f_t", "per_damping_factor"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {value}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        return self

    @property
    def damping_from_gamma(self) -> bool:
        """阻尼因子是否与 γ 给出的单光子保真度一致"""
        return math.isclose(self.per_damping_factor, single_photon_fidelity(self.gamma), rel_tol=1e-9)

    @classmethod
    def table2(cls, f_s: float = DEFAULT_FS, f_t: float = DEFAULT_FT) -> "NoiseParams":
        return cls(f_s=f_s, f_t=f_t, per_damping_factor=TABLE2_DAMPING_FACTOR)


class KrausPair(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    k0: np.ndarray
    k1: np.ndarray

    @field_validator("k0", "k1", mode="before")
    @classmethod
    def _as_matrix(cls, v) -> np.ndarray:
        arr = np.array(v, dtype=np.complex128)
        if arr.shape != (2, 2):
            raise ValueError(f"Kraus operators must be 2x2, got {arr.shape}")
        arr.flags.writeable = False
        return arr

    @model_validator(mode="after")
    def _check_completeness(self) -> "KrausPair":
        if self.residual >= NORM_TOL:
            raise ValueError(f"Kraus pair is not trace preserving (residual {self.residual:.3e})")
        return self

    @property
    def residual(self) -> float:
        total = self.k0.conj().T @ self.k0 + self.k1.conj().T @ self.k1
        return float(np.max(np.abs(total - np.eye(2))))

    def as_list(self) -> list[np.ndarray]:
        return [self.k0, self.k1]


class FidelityReport(BaseModel):
    """
    f_c = f_s^n_h · f_t^n_cz · A^(n_h·n_damp_ops)

    log10_f_c 在对数空间求和，f_c 下溢为 0 时仍给出量级。
    """

    model_config = ConfigDict(frozen=True)

    n_h: int
    n_cz: int
    n_tdf: int
    n_damp_ops: int
    params: NoiseParams
    gate_h_factor: float
    gate_cz_factor: float
    damping_factor: float
    f_c: float
    log10_f_c: float
    exact_damped: Optional[float] = None
    product_damped: Optional[float] = None

    @model_validator(mode="after")
    def _check_product(self) -> "FidelityReport":
        if not 0.0 <= self.f_c <= 1.0:
            raise ValueError(f"f_c must lie in [0, 1], got {self.f_c}")
        if self.log10_f_c > 0.0:
            raise ValueError(f"log10_f_c must be <= 0, got {self.log10_f_c}")
        expected = self.gate_h_factor * self.gate_cz_factor * self.damping_factor
        if not math.isclose(self.f_c, expected, rel_tol=1e-12):
            raise ValueError("f_c is not the product of its factors")
        if self.f_c > 1e-300 and not math.isclose(math.log10(self.f_c), self.log10_f_c, abs_tol=1e-9):
            raise ValueError("log10_f_c does not match f_c")
        return self

    @property
    def underflow(self) -> bool:
        return self.f_c == 0.0


# ---------- 信道 ----------
def amplitude_damping_kraus(gamma: float) -> KrausPair:
    """K0 = diag(1, √(1−γ))，K1 = √γ |0⟩⟨1|"""
    if not 0.0 <= gamma < 1.0:
        raise OutOfRangeError(f"gamma must lie in [0, 1), got {gamma}")
    k0 = np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - gamma)]])
    k1 = np.array([[0.0, math.sqrt(gamma)], [0.0, 0.0]])
    return KrausPair(k0=k0, k1=k1)


def _check_beta(beta: float) -> Decimal:
    if not 0.5 <= beta <= 1.0:
        raise OutOfRangeError(f"beta must lie in [0.5, 1], got {beta}")
    return Decimal(str(beta))


def circulator_gamma(beta: float) -> float:
    """γ = 2(1−β)，十进制计算保证 0.51 -> 0.98、0.98 -> 0.04 精确"""
    return float(2 * (Decimal(1) - _check_beta(beta)))


def circulator_kraus(beta: float) -> KrausPair:
    """K0 = diag(−√(2β−1), 1)，K1 左下角 √(2(1−β))"""
    b = _check_beta(beta)
    k0 = np.array([[-math.sqrt(float(2 * b - 1)), 0.0], [0.0, 1.0]])
    k1 = np.array([[0.0, 0.0], [math.sqrt(float(2 * (1 - b))), 0.0]])
    return KrausPair(k0=k0, k1=k1)


def mzi_ratio(theta: float) -> float:
    """MZI 从端口 ③ 输出的比例 (1−cos θ)/2"""
    if not 0.0 <= theta < 2 * math.pi:
        raise OutOfRangeError(f"theta must lie in [0, 2π), got {theta}")
    return (1.0 - math.cos(theta)) / 2.0


def beta_from_rates(gamma_r: float, gamma_l: float, gamma_rad: float) -> float:
    """β = Γ_R / (Γ_R + Γ_L + γ_rad)"""
    rates = (gamma_r, gamma_l, gamma_rad)
    if min(rates) < 0 or sum(rates) <= 0:
        raise OutOfRangeError(f"decay rates must be non-negative with a positive sum, got {rates}")
    return gamma_r / sum(rates)


# ---------- 密度矩阵 ----------
def _n_qubits(rho: np.ndarray) -> int:
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise NoiseModelError(f"density matrix must be square, got shape {rho.shape}")
    n = int(rho.shape[0]).bit_length() - 1
    if 2 ** n != rho.shape[0]:
        raise NoiseModelError(f"dimension {rho.shape[0]} is not a power of two")
    return n


def _check_density(rho: np.ndarray) -> int:
    n = _n_qubits(rho)
    if not np.allclose(rho, rho.conj().T, atol=PSD_TOL):
        raise NoiseModelError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > PSD_TOL:
        raise NoiseModelError(f"density matrix has trace {np.trace(rho).real}")
    return n


def apply_channel(rho: np.ndarray, kraus: KrausPair, qubit: int) -> np.ndarray:
    """Σ K̃ ρ K̃†，K̃ 为作用在第 qubit 个轴上的单比特算符"""
    rho = np.asarray(rho, dtype=np.complex128)
    n = _check_density(rho)
    if n > DENSITY_MAX_QUBITS:
        raise TooLargeError(n, DENSITY_MAX_QUBITS)
    if not 0 <= qubit < n:
        raise NoiseModelError(f"qubit {qubit} outside a {n}-qubit register")

    tensor = rho.reshape((2,) * (2 * n))
    out = np.zeros_like(tensor)
    for k in kraus.as_list():
        left = np.moveaxis(np.tensordot(k, tensor, axes=([1], [qubit])), 0, qubit)
        both = np.moveaxis(np.tensordot(left, k.conj(), axes=([n + qubit], [1])), -1, n + qubit)
        out += both
    return out.reshape(2 ** n, 2 ** n)


def _eigh_psd(rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(rho)
    if w.min() < -PSD_TOL:
        raise NotPositiveError(f"matrix has eigenvalue {w.min():.3e} below -{PSD_TOL}")
    return np.clip(w, 0.0, None), v


def state_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """(Tr√(√ρ σ √ρ))²；ρ 为纯态时直接取 ⟨ψ|σ|ψ⟩"""
    rho = np.asarray(rho, dtype=np.complex128)
    sigma = np.asarray(sigma, dtype=np.complex128)
    if _check_density(rho) != _check_density(sigma):
        raise NoiseModelError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")

    w, v = _eigh_psd(rho)
    _eigh_psd(sigma)
    if abs(w[-1] - 1.0) < PSD_TOL:
        psi = v[:, -1]
        value = float(np.vdot(psi, sigma @ psi).real)
    else:
        root = (v * np.sqrt(w)) @ v.conj().T
        inner = np.linalg.eigvalsh(root @ sigma @ root)
        value = float(np.sum(np.sqrt(np.clip(inner, 0.0, None))) ** 2)
    return min(max(value, 0.0), 1.0)


def exact_damped_fidelity(graph: ClusterGraph, gamma: float) -> float:
    """
    每个激发光子都经过一次振幅阻尼后的精确保真度

    虚节点处于 |0⟩，阻尼对其无作用，所以只在激发子图上计算。
    """
    k = graph.n_excited
    if k > ORACLE_MAX_QUBITS:
        raise TooLargeError(k, ORACLE_MAX_QUBITS)
    if k == 0:
        return 1.0
    position = {slot: idx for idx, slot in enumerate(graph.excited, start=1)}
    compact = _compact(graph, position)
    psi = dense_graph_state(compact).amplitudes
    rho = np.outer(psi, psi.conj())
    kraus = amplitude_damping_kraus(gamma)
    damped = rho
    for q in range(k):
        damped = apply_channel(damped, kraus, q)
    return state_fidelity(rho, damped)


def _compact(graph: ClusterGraph, position: dict[int, int]) -> ClusterGraph:
    return ClusterGraph(
        n_slots=len(position),
        excited=list(position.values()),
        edges=[(position[i], position[j]) for i, j in graph.edges],
    )


def damping_product_check(n: int, gamma: float) -> tuple[float, float]:
    """路径图态上的 (精确值, 乘积公式)"""
    if not 2 <= n <= ORACLE_MAX_QUBITS:
        raise OutOfRangeError(f"n must lie in [2, {ORACLE_MAX_QUBITS}], got {n}")
    path = build_family(FamilySpec(family=FamilyKind.LINEAR, params=(n,)))
    return exact_damped_fidelity(path, gamma), damping_fidelity(n, gamma)


# ---------- 闭式估计 ----------
def fidelity_estimate(D: DistributionMatrix, n_tdf: int, params: NoiseParams) -> FidelityReport:
    """门数取自分布矩阵，阻尼次数为 max(n_tdf − 1, 0)"""
    if n_tdf < 0:
        raise OutOfRangeError(f"n_tdf must be >= 0, got {n_tdf}")
    n_h, n_cz = gate_counts(D)
    n_damp_ops = max(n_tdf - 1, 0)
    gate_h = params.f_s ** n_h
    gate_cz = params.f_t ** n_cz
    damping = params.per_damping_factor ** (n_h * n_damp_ops)
    log10_f_c = (
        n_h * math.log10(params.f_s)
        + n_cz * math.log10(params.f_t)
        + n_h * n_damp_ops * math.log10(params.per_damping_factor)
    )
    f_c = gate_h * gate_cz * damping
    if f_c == 0.0:
        logger.warning("f_c underflows to 0 (log10 f_c = %.4g)", log10_f_c)

    # 精确阻尼只对应 γ 定义的信道，显式改写的阻尼因子没有可比的 oracle
    exact = product = None
    if 0 < n_h <= ORACLE_MAX_QUBITS and params.damping_from_gamma:
        exact = exact_damped_fidelity(graph_of(D), params.gamma)
        product = damping_fidelity(n_h, params.gamma)

    return FidelityReport(
        n_h=n_h,
        n_cz=n_cz,
        n_tdf=n_tdf,
        n_damp_ops=n_damp_ops,
        params=params,
        gate_h_factor=gate_h,
        gate_cz_factor=gate_cz,
        damping_factor=damping,
        f_c=f_c,
        log10_f_c=log10_f_c,
        exact_damped=exact,
        product_damped=product,
    )


class GammaReading(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str
    gamma: float
    f_single: float


def gamma_readings() -> list[GammaReading]:
    """“参考 γ = 0.98” 的三种读法"""
    readings = [("gamma = 0.98", 0.98), ("F_single = 0.98", 0.0784), ("beta = 0.98", circulator_gamma(0.98))]
    return [GammaReading(label=label, gamma=g, f_single=single_photon_fidelity(g)) for label, g in readings]


# ---------- 基准表 ----------
class Table2Row(BaseModel):
    model_config = ConfigDict(frozen=True)

    state: str
    n: int
    d: int
    n_tdf: int
    f_c: float


def table2_rows(params: Optional[NoiseParams] = None, max_depth: int = 5) -> list[Table2Row]:
    """
    由真实编译结果计算 15 个条目

    - TCS_initial:   naive 编号的额外 TDF 数（2^(d−1)−1）
    - TCS_optimized: 格点嵌入后的 TDF 块数
    - CCS:           N = 2^d − 1 时的全部延迟类数（N−1）
    """
    params = params or NoiseParams.table2()
    rows: list[Table2Row] = []
    for d in range(1, max_depth + 1):
        tcs = build_family(FamilySpec(family=FamilyKind.TCS, params=(2, d)))
        naive = compile_naive(tcs)
        f_c = fidelity_estimate(naive.distribution(), len(naive.blocks), params).f_c
        rows.append(Table2Row(state="TCS_initial", n=tcs.n_slots, d=d, n_tdf=len(naive.blocks), f_c=f_c))

    for d in range(1, max_depth + 1):
        lattice = compile_lattice_embedded(2, d)
        f_c = fidelity_estimate(lattice.distribution(), len(lattice.blocks), params).f_c
        rows.append(Table2Row(state="TCS_optimized", n=len(lattice.excitation_set), d=d, n_tdf=len(lattice.blocks), f_c=f_c))

    for d in range(1, max_depth + 1):
        n = 2 ** d - 1
        ccs = build_family(FamilySpec(family=FamilyKind.CCS, params=(n,)))
        D = compile_naive(ccs).distribution()
        n_tdf = len(delay_classes(D))
        rows.append(Table2Row(state="CCS", n=n, d=d, n_tdf=n_tdf, f_c=fidelity_estimate(D, n_tdf, params).f_c))

    logger.info("table2: %d rows with f_s=%s f_t=%s A=%s", len(rows), params.f_s, params.f_t, params.per_damping_factor)
    return rows

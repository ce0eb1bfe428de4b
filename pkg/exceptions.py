"""自定义异常类模块"""


class ClusterToolkitError(Exception):
    """工具链异常基类"""
    pass


# ---------- 表示层 ----------
class RepresentationError(ClusterToolkitError):
    """图 / 分布矩阵相关异常基类"""
    pass


class IndexOutOfRangeError(RepresentationError):
    """时间槽下标越界"""
    def __init__(self, index: int, n_slots: int, message: str | None = None):
        self.index = index
        self.n_slots = n_slots
        self.message = message or f"Slot {index} outside [1, {n_slots}]"
        super().__init__(self.message)


class EntangleUnexcitedError(RepresentationError):
    """对未激发的时间槽施加纠缠"""
    def __init__(self, i: int, j: int):
        self.i = i
        self.j = j
        super().__init__(f"Entangle({i}, {j}) touches an unexcited slot")


class InvalidPermutationError(RepresentationError):
    """编号不是合法的置换 / 单射"""
    pass


class InvalidFamilyError(RepresentationError):
    """态族参数非法"""
    pass


class SpecParseError(ClusterToolkitError):
    """图规格 / 调度文件无法解析"""
    pass


# ---------- 调度与仿真 ----------
class ScheduleError(ClusterToolkitError):
    """调度不满足不变量"""
    pass


class MaskViolationError(ScheduleError):
    """门掩码引用了真空槽"""
    pass


class DelayMismatchError(ScheduleError):
    """块配置与调度的延迟因子不一致"""
    pass


class EmbeddingInfeasibleError(ClusterToolkitError):
    """树无法嵌入格点（容量不足或回溯耗尽）"""
    def __init__(self, a: int, d: int, reason: str, feasibility: int | None = None):
        self.a = a
        self.d = d
        self.reason = reason
        self.feasibility = feasibility
        if reason == "capacity":
            message = f"TCS({a},{d}) cannot be embedded: F({a},{d}) = {feasibility} < 0"
            if feasibility == 0:
                message = f"TCS({a},{d}) cannot be embedded: F({a},{d}) = 0"
        else:
            message = f"TCS({a},{d}) embedding search exhausted ({reason})"
        super().__init__(message)


class NotGraphStateError(ClusterToolkitError):
    """稳定子群的规范形不是图态"""
    pass


class TooLargeError(ClusterToolkitError):
    """稠密模拟的量子比特数超过上限"""
    def __init__(self, n: int, limit: int):
        self.n = n
        self.limit = limit
        super().__init__(f"{n} qubits exceeds the dense limit of {limit}")


# ---------- 噪声模型 ----------
class NoiseModelError(ClusterToolkitError):
    """噪声 / 保真度计算异常基类"""
    pass


class OutOfRangeError(NoiseModelError):
    """参数超出物理取值范围"""
    pass


class NotPositiveError(NoiseModelError):
    """矩阵不是半正定的"""
    pass

"""
任务模型：实时任务、安全任务、平台、系统配置与分配结果

所有时间量均为非负整数微秒，比值一律使用 Fraction 精确表示。
"""
from collections import Counter
from fractions import Fraction
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


# ==================== 异常 ====================

class HydraError(Exception):
    """项目异常基类"""


class InputError(HydraError):
    """输入文件或参数错误"""


class AllocationOrderError(HydraError):
    """同核心上的高优先级安全任务尚未确定周期"""


class IncompleteAllocationError(HydraError):
    """分配结果不完整"""


class SimulationError(HydraError):
    """仿真输入未通过分析校验"""


class LimitExceededError(HydraError):
    """超出内部上限（穷举规模、重抽次数等）"""


class PartitionError(HydraError):
    """没有核心能够容纳某个实时任务"""

    def __init__(self, task_id: str, message: Optional[str] = None):
        self.task_id = task_id
        super().__init__(message or f"无法为实时任务 {task_id} 找到可调度的核心")


class GenerationError(LimitExceededError):
    """任务集生成在重抽上限内没有得到合格实例"""

    def __init__(self, attempts: int, reasons: Dict[str, int]):
        self.attempts = attempts
        self.reasons = dict(reasons)
        summary = ", ".join(f"{k}={v}" for k, v in sorted(self.reasons.items())) or "无"
        super().__init__(f"重抽 {attempts} 次后仍未生成合格任务集（失败原因: {summary}）")


# ==================== 工具函数 ====================

def to_fraction(value: Any) -> Fraction:
    """将整数、字符串（'3/10' 或 '0.3'）或浮点数转换为 Fraction"""
    if isinstance(value, bool):
        raise ValueError("布尔值不能作为有理数")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        # 按十进制字面值解析，0.3 -> 3/10
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except ZeroDivisionError as exc:
            raise ValueError(f"分母为 0: {value!r}") from exc
    raise ValueError(f"无法解析的有理数: {value!r}")


_VALUE_MODEL = ConfigDict(frozen=True, arbitrary_types_allowed=True)


# ==================== 任务 ====================

class RealTimeTask(BaseModel):
    """实时任务 (C_r, T_r, D_r)，截止期隐式等于周期"""
    model_config = _VALUE_MODEL

    id: str
    wcet: int = Field(..., ge=0, description="最坏执行时间 C_r（微秒）")
    period: int = Field(..., ge=0, description="最小到达间隔 T_r（微秒）")
    deadline: int = Field(..., ge=0, description="相对截止期 D_r（微秒）")
    priority: Optional[int] = Field(None, description="RM 优先级序号，越小越高")

    @model_validator(mode="before")
    @classmethod
    def _implicit_deadline(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("deadline") is None:
            data = {**data, "deadline": data.get("period")}
        return data

    @property
    def utilization(self) -> Fraction:
        return Fraction(self.wcet, self.period)


class SecurityTask(BaseModel):
    """安全监控任务 (C_s, T_s^des, T_s^max, ω_s)"""
    model_config = _VALUE_MODEL

    id: str
    wcet: int = Field(..., ge=0, description="最坏执行时间 C_s（微秒）")
    desired_period: int = Field(..., ge=0, description="期望周期 T_s^des（微秒）")
    max_period: int = Field(..., ge=0, description="最大可接受周期 T_s^max（微秒）")
    weight: Fraction = Field(default=Fraction(1), description="权重 ω_s")
    priority: Optional[int] = Field(None, description="安全任务间的优先级序号")

    @field_validator("weight", mode="before")
    @classmethod
    def _parse_weight(cls, value: Any) -> Fraction:
        return to_fraction(value)

    @property
    def desired_frequency(self) -> Fraction:
        """F_s^des = 1 / T_s^des"""
        return Fraction(1, self.desired_period)

    @property
    def utilization(self) -> Fraction:
        """按期望周期计算的利用率"""
        return Fraction(self.wcet, self.desired_period)


# ==================== 平台与系统配置 ====================

class Platform(BaseModel):
    """M 个同构核心及实时任务的静态划分"""
    model_config = _VALUE_MODEL

    core_count: int
    rt_partition: Dict[str, int] = Field(default_factory=dict)

    def core_of(self, task_id: str) -> Optional[int]:
        return self.rt_partition.get(task_id)

    def indicator(self, task_id: str, core: int) -> int:
        """𝕀_r^m"""
        return 1 if self.rt_partition.get(task_id) == core else 0


class SystemConfig(BaseModel):
    """平台 + 实时任务集 + 安全任务集"""
    model_config = _VALUE_MODEL

    platform: Platform
    rt_tasks: List[RealTimeTask] = Field(default_factory=list)
    sec_tasks: List[SecurityTask] = Field(default_factory=list)
    weights_defaulted: bool = False

    @property
    def core_count(self) -> int:
        return self.platform.core_count

    def with_priorities(self) -> "SystemConfig":
        """按 RM 与 T_max 规则重新分配两类任务的优先级"""
        return self.model_copy(update={
            "rt_tasks": assign_rm_priorities(self.rt_tasks),
            "sec_tasks": assign_security_priorities(self.sec_tasks),
        })

    def with_platform(self, platform: Platform) -> "SystemConfig":
        return self.model_copy(update={"platform": platform})

    def rt_on_core(self, core: int) -> List[RealTimeTask]:
        return [t for t in self.rt_tasks if self.platform.core_of(t.id) == core]

    def security_by_priority(self) -> List[SecurityTask]:
        """按优先级从高到低排列的安全任务（要求已分配优先级）"""
        return sorted(self.sec_tasks, key=lambda t: (t.priority, t.id))

    def security_task(self, task_id: str) -> SecurityTask:
        for task in self.sec_tasks:
            if task.id == task_id:
                return task
        raise KeyError(task_id)

    def higher_priority_security(self, task: SecurityTask) -> List[SecurityTask]:
        """hp_S(τ_s)"""
        return [t for t in self.sec_tasks if t.priority is not None and t.priority < task.priority]

    def rt_utilization(self) -> Fraction:
        return sum((t.utilization for t in self.rt_tasks), Fraction(0))

    def security_utilization(self) -> Fraction:
        return sum((t.utilization for t in self.sec_tasks), Fraction(0))


# ==================== 分配结果 ====================

class Allocation(BaseModel):
    """安全任务到核心的分配向量 X、周期向量 T 以及各任务的紧密度 η"""
    model_config = _VALUE_MODEL

    assignment: Dict[str, int] = Field(default_factory=dict)
    periods: Dict[str, int] = Field(default_factory=dict)
    tightness: Dict[str, Fraction] = Field(default_factory=dict)

    @classmethod
    def empty(cls) -> "Allocation":
        return cls()

    def with_assignment(self, assignment: Dict[str, int]) -> "Allocation":
        """固定分配向量，周期留待后续确定"""
        return self.model_copy(update={"assignment": {**self.assignment, **assignment}})

    def with_task(self, task: SecurityTask, core: int, period: int) -> "Allocation":
        """将任务放到 core 上并固定其周期"""
        if period < task.desired_period or period > task.max_period:
            raise ValueError(f"安全任务 {task.id} 的周期 {period} 超出 [T_des, T_max]")
        return self.model_copy(update={
            "assignment": {**self.assignment, task.id: core},
            "periods": {**self.periods, task.id: period},
            "tightness": {**self.tightness, task.id: Fraction(task.desired_period, period)},
        })

    def is_complete(self, sec_tasks: List[SecurityTask]) -> bool:
        return all(t.id in self.assignment and t.id in self.periods for t in sec_tasks)

    def security_utilization(self, core: int, sec_tasks: List[SecurityTask]) -> Fraction:
        """核心上安全任务按实际周期计算的利用率"""
        total = Fraction(0)
        for task in sec_tasks:
            if self.assignment.get(task.id) == core and task.id in self.periods:
                total += Fraction(task.wcet, self.periods[task.id])
        return total


# ==================== 优先级分配 ====================

def assign_rm_priorities(rt_tasks: List[RealTimeTask]) -> List[RealTimeTask]:
    """速率单调：周期越短优先级越高，相同周期按 id 字典序"""
    order = sorted(range(len(rt_tasks)), key=lambda i: (rt_tasks[i].period, rt_tasks[i].id))
    ranks = {index: rank for rank, index in enumerate(order)}
    return [task.model_copy(update={"priority": ranks[i]}) for i, task in enumerate(rt_tasks)]


def assign_security_priorities(sec_tasks: List[SecurityTask]) -> List[SecurityTask]:
    """T_max 越小优先级越高；相同 T_max 时 T_des 小者优先，再按 id 字典序"""
    order = sorted(
        range(len(sec_tasks)),
        key=lambda i: (sec_tasks[i].max_period, sec_tasks[i].desired_period, sec_tasks[i].id),
    )
    ranks = {index: rank for rank, index in enumerate(order)}
    return [task.model_copy(update={"priority": ranks[i]}) for i, task in enumerate(sec_tasks)]


# ==================== 配置校验 ====================

class Violation(BaseModel):
    """一条不变式违例"""
    model_config = _VALUE_MODEL

    code: str
    task: Optional[str] = None
    detail: str = ""


def validate_config(config: SystemConfig) -> List[Violation]:
    """返回配置中的全部违例，空列表表示合法"""
    violations: List[Violation] = []

    def add(code: str, task: Optional[str], detail: str):
        violations.append(Violation(code=code, task=task, detail=detail))

    core_count = config.platform.core_count
    if core_count <= 0:
        add("non-positive core count", None, f"核心数必须为正，当前为 {core_count}")

    ids = Counter([t.id for t in config.rt_tasks] + [t.id for t in config.sec_tasks])
    for task_id, count in sorted(ids.items()):
        if count > 1:
            add("duplicate task id", task_id, f"任务 id 重复 {count} 次")

    for task in config.rt_tasks:
        if task.wcet <= 0:
            add("non-positive wcet", task.id, "实时任务 WCET 必须为正")
        if task.period <= 0:
            add("non-positive period", task.id, "实时任务周期必须为正")
        if task.deadline != task.period:
            add("non-implicit deadline", task.id, f"截止期 {task.deadline} 不等于周期 {task.period}")
        if task.wcet > task.deadline:
            add("wcet exceeds deadline", task.id, f"C_r={task.wcet} > D_r={task.deadline}")

    for task in config.sec_tasks:
        if task.wcet <= 0:
            add("non-positive wcet", task.id, "安全任务 WCET 必须为正")
        if task.desired_period <= 0:
            add("non-positive period", task.id, "安全任务期望周期必须为正")
        if task.wcet > task.desired_period:
            add("wcet exceeds desired period", task.id, f"C_s={task.wcet} > T_des={task.desired_period}")
        if task.desired_period > task.max_period:
            add("desired period exceeds max period", task.id,
                f"T_des={task.desired_period} > T_max={task.max_period}")
        if task.weight <= 0:
            add("non-positive weight", task.id, f"权重必须为正，当前为 {task.weight}")

    rt_ids = {t.id for t in config.rt_tasks}
    for task in config.rt_tasks:
        core = config.platform.core_of(task.id)
        if core is None:
            add("unpartitioned real-time task", task.id, "实时任务未划分到任何核心")
        elif not 0 <= core < max(core_count, 0):
            add("core index out of range", task.id, f"核心序号 {core} 不在 [0, {core_count}) 内")
    for task_id in sorted(set(config.platform.rt_partition) - rt_ids):
        add("unknown task in partition", task_id, "划分表中出现未知任务")

    _check_ranks(config.rt_tasks, assign_rm_priorities, "实时", add)
    _check_ranks(config.sec_tasks, assign_security_priorities, "安全", add)
    return violations


def _check_ranks(tasks, rank_rule, label: str, add) -> None:
    """已分配的优先级必须互不相同且符合排序规则"""
    ranks = [t.priority for t in tasks]
    if not tasks or any(r is None for r in ranks):
        return
    for rank, count in sorted(Counter(ranks).items()):
        if count > 1:
            add("duplicate priority", None, f"{label}任务优先级 {rank} 重复")
            return
    expected = [t.priority for t in rank_rule(tasks)]
    if ranks != expected:
        add("priority order violated", None, f"{label}任务优先级不符合排序规则")


"""
可调度性分析

- 需求界函数 DBF 与多核必要条件 Σ DBF(τ_r, t) ≤ M·t
- 安全任务受到的干扰上界 I_s^m 及其可调度条件 C_s + I_s^m ≤ T_s
- 实时任务的单核响应时间分析（划分器的准入测试）
"""
import heapq
import logging
import math
from fractions import Fraction
from typing import Iterable, Iterator, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict

from models import (
    Allocation, AllocationOrderError, RealTimeTask, SecurityTask, SystemConfig,
)

logger = logging.getLogger(__name__)

DEFAULT_HORIZON_CAP_US = 1_000_000_000


# ==================== 需求界函数 ====================

def dbf(task: RealTimeTask, t: int) -> int:
    """区间长度 t 内释放且截止的作业的最大累计执行需求"""
    if t < 0:
        raise ValueError("t 必须非负")
    jobs = (t - task.deadline) // task.period + 1
    return max(0, jobs * task.wcet)


def hyperperiod(periods: Iterable[int], cap: Optional[int] = DEFAULT_HORIZON_CAP_US) -> int:
    """周期的最小公倍数，超过 cap 时截断并告警"""
    value = 1
    for period in periods:
        value = math.lcm(value, period)
        if cap is not None and value > cap:
            logger.warning("超周期超过上限 %d µs，按上限截断", cap)
            return cap
    return value


def _deadline_steps(task: RealTimeTask, horizon: int) -> Iterator[Tuple[int, int]]:
    d = task.deadline
    while d <= horizon:
        yield d, task.wcet
        d += task.period


def necessary_condition(rt_tasks: List[RealTimeTask], core_count: int,
                        horizon: Optional[int] = None) -> bool:
    """在所有截止期检查点上验证 Σ DBF(τ_r, t) ≤ M·t"""
    if not rt_tasks:
        return True
    if horizon is not None and horizon <= 0:
        raise ValueError("horizon 必须为正")

    # 隐式截止期下 DBF(τ, t) ≤ U·t，总利用率不超过 M 时条件对任意 t 成立
    if all(t.deadline == t.period for t in rt_tasks):
        if sum((t.utilization for t in rt_tasks), Fraction(0)) <= core_count:
            return True
    if horizon is None:
        horizon = hyperperiod(t.period for t in rt_tasks)

    demand = 0
    merged = heapq.merge(*(_deadline_steps(t, horizon) for t in rt_tasks))
    pending = None
    for point, wcet in merged:
        if pending is not None and point != pending and demand > core_count * pending:
            return False
        demand += wcet
        pending = point
    return pending is None or demand <= core_count * pending


# ==================== 安全任务干扰上界 ====================

class InterferenceBound(BaseModel):
    """I_s^m 在给定 T_s 处的取值，以及其仿射形式 I(T) = intercept + T·slope"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    core: int
    task: str
    value_us: Fraction
    intercept: Fraction
    slope: Fraction


def interference_coefficients(sec_task: SecurityTask, core: int, config: SystemConfig,
                              partial_alloc: Allocation) -> Tuple[Fraction, Fraction]:
    """返回 (Σ C_j, Σ C_j/T_j)，求和对象为该核心上的实时任务和已分配的高优先级安全任务"""
    intercept = Fraction(0)
    slope = Fraction(0)
    for rt in config.rt_on_core(core):
        intercept += rt.wcet
        slope += Fraction(rt.wcet, rt.period)
    for hp in config.higher_priority_security(sec_task):
        if partial_alloc.assignment.get(hp.id) != core:
            continue
        period = partial_alloc.periods.get(hp.id)
        if period is None:
            raise AllocationOrderError(
                f"核心 {core} 上的高优先级安全任务 {hp.id} 尚未确定周期，无法计算 {sec_task.id} 的干扰"
            )
        intercept += hp.wcet
        slope += Fraction(hp.wcet, period)
    return intercept, slope


def interference_bound(sec_task: SecurityTask, core: int, config: SystemConfig,
                       partial_alloc: Allocation, period: int) -> InterferenceBound:
    intercept, slope = interference_coefficients(sec_task, core, config, partial_alloc)
    return InterferenceBound(
        core=core,
        task=sec_task.id,
        value_us=intercept + slope * period,
        intercept=intercept,
        slope=slope,
    )


def interference(sec_task: SecurityTask, core: int, config: SystemConfig,
                 partial_alloc: Allocation, period: int) -> Fraction:
    """I_s^m = Σ 𝕀_r^m (1 + T_s/T_r) C_r + Σ x_h^m (1 + T_s/T_h) C_h"""
    return interference_bound(sec_task, core, config, partial_alloc, period).value_us


def security_schedulable(sec_task: SecurityTask, core: int, config: SystemConfig,
                         partial_alloc: Allocation, period: int) -> bool:
    """C_s + I_s^m ≤ T_s，精确比较"""
    return sec_task.wcet + interference(sec_task, core, config, partial_alloc, period) <= period


def verify_allocation(config: SystemConfig, allocation: Allocation) -> List[str]:
    """返回在所分配核心上不满足可调度条件（或未分配）的安全任务 id"""
    failing = []
    for task in config.security_by_priority():
        core = allocation.assignment.get(task.id)
        period = allocation.periods.get(task.id)
        if core is None or period is None:
            failing.append(task.id)
            continue
        if not task.desired_period <= period <= task.max_period:
            failing.append(task.id)
            continue
        if not security_schedulable(task, core, config, allocation, period):
            failing.append(task.id)
    return failing


# ==================== 实时任务响应时间分析 ====================

def rt_response_time(task: RealTimeTask, cohabitants: List[RealTimeTask]) -> Optional[int]:
    """
    不动点迭代 R = C + Σ ceil(R/T_j)·C_j

    cohabitants 为同核心上优先级更高的实时任务；R 超过 D 时返回 None（发散）。
    """
    response = task.wcet
    while True:
        if response > task.deadline:
            return None
        demand = task.wcet + sum(-(-response // hp.period) * hp.wcet for hp in cohabitants)
        if demand == response:
            return response
        response = demand


def core_rt_schedulable(tasks: List[RealTimeTask]) -> bool:
    """单核 RM 精确测试：按优先级逐个检查响应时间"""
    ordered = sorted(tasks, key=lambda t: (t.priority, t.period, t.id))
    for index, task in enumerate(ordered):
        if rt_response_time(task, ordered[:index]) is None:
            return False
    return True

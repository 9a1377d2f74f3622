"""
安全任务周期自适应

固定分配与高优先级任务周期后，I_s^m 是 T_s 的仿射函数 A + U·T_s，
约束 C_s + I_s^m ≤ T_s 化为 T_s·(1 − U) ≥ C_s + A，因此单任务子问题有闭式解。
"""
import logging
import math
from fractions import Fraction
from typing import List, Optional

from pydantic import BaseModel, ConfigDict

from models import Allocation, IncompleteAllocationError, SecurityTask, SystemConfig
from schedulability import interference, interference_coefficients, security_schedulable

logger = logging.getLogger(__name__)


class PeriodSolution(BaseModel):
    """单个 (任务, 核心) 子问题的最优周期"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    period: int
    tightness: Fraction
    slack: Fraction


def tightness(t_des: int, t: int) -> Fraction:
    """η = T_des / T"""
    if t_des <= 0:
        raise ValueError("T_des 必须为正")
    if t < t_des:
        raise ValueError(f"周期 {t} 小于期望周期 {t_des}")
    return Fraction(t_des, t)


def minimum_period(sec_task: SecurityTask, core: int, config: SystemConfig,
                   partial_alloc: Allocation) -> Optional[Fraction]:
    """满足可调度条件的最小实数周期 T_min = B / (1 − U)；U ≥ 1 时返回 None"""
    intercept, slope = interference_coefficients(sec_task, core, config, partial_alloc)
    if slope >= 1:
        return None
    return (sec_task.wcet + intercept) / (1 - slope)


def optimize_period(sec_task: SecurityTask, core: int, config: SystemConfig,
                    partial_alloc: Allocation) -> Optional[PeriodSolution]:
    """在 [T_des, T_max] 内求使 η 最大的周期；不可行时返回 None"""
    t_min = minimum_period(sec_task, core, config, partial_alloc)
    if t_min is None:
        return None
    period = max(sec_task.desired_period, math.ceil(t_min))
    if period > sec_task.max_period:
        return None

    slack = period - sec_task.wcet - interference(sec_task, core, config, partial_alloc, period)
    if slack < 0:
        # 1 − U > 0 时向上取整不会破坏可行性
        logger.error("任务 %s 在核心 %d 上取整后的周期 %d 不可行", sec_task.id, core, period)
        return None
    return PeriodSolution(
        period=period,
        tightness=tightness(sec_task.desired_period, period),
        slack=slack,
    )


def bisect_period(sec_task: SecurityTask, core: int, config: SystemConfig,
                  partial_alloc: Allocation) -> Optional[int]:
    """参考求解器：在 [T_des, T_max] 上对可调度条件做整数二分，返回最小可行周期"""
    lo, hi = sec_task.desired_period, sec_task.max_period
    if not security_schedulable(sec_task, core, config, partial_alloc, hi):
        return None
    while lo < hi:
        mid = (lo + hi) // 2
        if security_schedulable(sec_task, core, config, partial_alloc, mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def objective_value(allocation: Allocation, sec_tasks: List[SecurityTask]) -> Fraction:
    """Σ_m Σ_s x_s^m ω_s T_s^des / T_s"""
    if not allocation.is_complete(sec_tasks):
        missing = [t.id for t in sec_tasks if t.id not in allocation.assignment or t.id not in allocation.periods]
        raise IncompleteAllocationError(f"安全任务 {missing[0]} 未分配核心或周期")
    total = Fraction(0)
    for task in sec_tasks:
        total += task.weight * Fraction(task.desired_period, allocation.periods[task.id])
    return total


def cumulative_tightness(allocation: Allocation) -> Fraction:
    """不加权的 Σ η"""
    return sum(allocation.tightness.values(), Fraction(0))

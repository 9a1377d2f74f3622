"""
安全任务分配算法

- HYDRA：按优先级逐个为安全任务选择紧密度最大的核心
- SingleCore：实时任务划分到 M−1 个核心，剩余核心专用于安全任务
- 穷举最优：枚举全部分配向量，作为 HYDRA 的对照
"""
import itertools
import logging
from fractions import Fraction
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field

from models import (
    Allocation, HydraError, LimitExceededError, PartitionError, Platform,
    SecurityTask, SystemConfig,
)
from partitioner import best_fit_partition
from period_opt import cumulative_tightness, minimum_period, objective_value, optimize_period
from schedulability import verify_allocation

logger = logging.getLogger(__name__)

SCHEME_HYDRA = "hydra"
SCHEME_SINGLE_CORE = "single-core"
SCHEME_OPTIMAL = "optimal"
SCHEMES = (SCHEME_HYDRA, SCHEME_SINGLE_CORE, SCHEME_OPTIMAL)

REASON_RT_PARTITION_FAILED = "rt_partition_failed"
REASON_SECURITY_INFEASIBLE = "security_infeasible"
REASON_NO_FEASIBLE_ASSIGNMENT = "no_feasible_assignment"


class AllocationOutcome(BaseModel):
    """一次分配的结果；result 为 None 表示分析判定不可调度"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    scheme: str
    config: SystemConfig
    result: Optional[Allocation] = None
    failed_task: Optional[str] = None
    reason: Optional[str] = None
    hint: Optional[str] = None
    objective: Fraction = Fraction(0)
    per_core_security_util: List[Fraction] = Field(default_factory=list)

    @property
    def schedulable(self) -> bool:
        return self.result is not None


# ==================== 内部工具 ====================

def _designer_hint(task: SecurityTask, config: SystemConfig, allocation: Allocation,
                   cores: List[int]) -> str:
    """不可调度时给设计者的提示：各核心上能达到的最小周期与 T_max 的差距"""
    best: Optional[Fraction] = None
    for core in cores:
        t_min = minimum_period(task, core, config, allocation)
        if t_min is not None and (best is None or t_min < best):
            best = t_min
    if best is None:
        return f"安全任务 {task.id} 在所有候选核心上的干扰利用率均不小于 1"
    return (f"安全任务 {task.id} 的最小可行周期约为 {float(best):.0f} µs，"
            f"超过 T_max={task.max_period} µs")


def _unschedulable(scheme: str, config: SystemConfig, reason: str,
                   failed_task: Optional[str] = None, hint: Optional[str] = None) -> AllocationOutcome:
    logger.info("%s 判定不可调度: %s %s", scheme, reason, failed_task or "")
    return AllocationOutcome(scheme=scheme, config=config, failed_task=failed_task,
                             reason=reason, hint=hint)


def _finish(scheme: str, config: SystemConfig, allocation: Allocation) -> AllocationOutcome:
    failing = verify_allocation(config, allocation)
    if failing:
        raise HydraError(f"{scheme} 分配结果未通过事后校验: {', '.join(failing)}")
    return AllocationOutcome(
        scheme=scheme,
        config=config,
        result=allocation,
        objective=objective_value(allocation, config.sec_tasks),
        per_core_security_util=[
            allocation.security_utilization(core, config.sec_tasks)
            for core in range(config.core_count)
        ],
    )


# ==================== HYDRA ====================

def hydra_allocate(config: SystemConfig) -> AllocationOutcome:
    """按优先级从高到低为每个安全任务选出紧密度最大的核心并固定周期"""
    config = config.with_priorities()
    cores = list(range(config.core_count))
    allocation = Allocation.empty()

    for task in config.security_by_priority():
        best_core, best = None, None
        for core in cores:
            solution = optimize_period(task, core, config, allocation)
            if solution is None:
                continue
            # 严格大于：紧密度相同时保留序号最小的核心
            if best is None or solution.tightness > best.tightness:
                best_core, best = core, solution
        if best is None:
            hint = _designer_hint(task, config, allocation, cores)
            return _unschedulable(SCHEME_HYDRA, config, REASON_SECURITY_INFEASIBLE, task.id, hint)
        allocation = allocation.with_task(task, best_core, best.period)

    return _finish(SCHEME_HYDRA, config, allocation)


# ==================== SingleCore ====================

def single_core_allocate(config: SystemConfig, strategy: str = "best-fit") -> AllocationOutcome:
    """实时任务重新划分到前 M−1 个核心，全部安全任务放在序号最大的核心"""
    config = config.with_priorities()
    core_count = config.core_count
    dedicated = core_count - 1

    try:
        rt_platform = best_fit_partition(config.rt_tasks, core_count - 1, strategy)
    except PartitionError as exc:
        hint = f"实时任务 {exc.task_id} 无法放入 {core_count - 1} 个核心"
        return _unschedulable(SCHEME_SINGLE_CORE, config, REASON_RT_PARTITION_FAILED, hint=hint)

    config = config.with_platform(Platform(core_count=core_count, rt_partition=rt_platform.rt_partition))
    allocation = Allocation.empty()
    for task in config.security_by_priority():
        solution = optimize_period(task, dedicated, config, allocation)
        if solution is None:
            hint = _designer_hint(task, config, allocation, [dedicated])
            return _unschedulable(SCHEME_SINGLE_CORE, config, REASON_SECURITY_INFEASIBLE, task.id, hint)
        allocation = allocation.with_task(task, dedicated, solution.period)

    return _finish(SCHEME_SINGLE_CORE, config, allocation)


# ==================== 穷举最优 ====================

def _periods_for_assignment(config: SystemConfig, tasks: List[SecurityTask],
                            assignment: Dict[str, int]) -> Optional[Allocation]:
    """分配向量固定后按优先级依次取最小可行周期；任一任务不可行返回 None"""
    allocation = Allocation.empty().with_assignment(assignment)
    for task in tasks:
        core = assignment[task.id]
        solution = optimize_period(task, core, config, allocation)
        if solution is None:
            return None
        allocation = allocation.with_task(task, core, solution.period)
    return allocation


def exhaustive_optimal(config: SystemConfig, max_assignments: int = 1_000_000) -> AllocationOutcome:
    """
    枚举 cores^{N_S} 个分配向量，保留目标值最大的可行分配

    目标值相同时保留字典序最小的分配向量（枚举顺序即字典序）。
    """
    config = config.with_priorities()
    tasks = config.security_by_priority()
    core_count = config.core_count
    combinations = core_count ** len(tasks)
    if combinations > max_assignments:
        raise LimitExceededError(
            f"穷举需要 {core_count}^{len(tasks)} = {combinations} 个分配，超过上限 {max_assignments}"
        )

    best, best_objective = None, None
    for vector in itertools.product(range(core_count), repeat=len(tasks)):
        assignment = {task.id: core for task, core in zip(tasks, vector)}
        allocation = _periods_for_assignment(config, tasks, assignment)
        if allocation is None:
            continue
        value = objective_value(allocation, tasks)
        if best_objective is None or value > best_objective:
            best, best_objective = allocation, value

    if best is None:
        return _unschedulable(SCHEME_OPTIMAL, config, REASON_NO_FEASIBLE_ASSIGNMENT)
    return _finish(SCHEME_OPTIMAL, config, best)


def delta_eta(optimal: AllocationOutcome, heuristic: AllocationOutcome) -> Optional[Fraction]:
    """Δη = (η_OPT − η_H) / η_OPT × 100，使用不加权的累计紧密度；任一方不可调度时为 None"""
    if not optimal.schedulable or not heuristic.schedulable:
        return None
    eta_opt = cumulative_tightness(optimal.result)
    eta_heuristic = cumulative_tightness(heuristic.result)
    if eta_opt == 0:
        return Fraction(0)
    return (eta_opt - eta_heuristic) / eta_opt * 100


def allocate(config: SystemConfig, scheme: str, limit: int = 1_000_000,
             strategy: str = "best-fit") -> AllocationOutcome:
    """按方案名分派"""
    if scheme == SCHEME_HYDRA:
        return hydra_allocate(config)
    if scheme == SCHEME_SINGLE_CORE:
        return single_core_allocate(config, strategy)
    if scheme == SCHEME_OPTIMAL:
        return exhaustive_optimal(config, limit)
    raise ValueError(f"未知的分配方案: {scheme}")

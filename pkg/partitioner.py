"""
实时任务划分

按利用率递减顺序逐个放置任务，准入测试为单核 RM 精确响应时间分析。
"""
import logging
from fractions import Fraction
from typing import Dict, List

from models import PartitionError, Platform, RealTimeTask, assign_rm_priorities
from schedulability import core_rt_schedulable

logger = logging.getLogger(__name__)

STRATEGIES = ("best-fit", "first-fit", "worst-fit")


def _pick_core(candidates: List[int], loads: List[Fraction], strategy: str) -> int:
    if strategy == "first-fit":
        return candidates[0]
    if strategy == "worst-fit":
        # 负载最小，相同取序号最小
        return min(candidates, key=lambda m: (loads[m], m))
    # best-fit：负载最大，相同取序号最小
    return min(candidates, key=lambda m: (-loads[m], m))


def best_fit_partition(rt_tasks: List[RealTimeTask], core_count: int,
                       strategy: str = "best-fit") -> Platform:
    """
    将实时任务划分到 core_count 个核心

    任务按利用率递减（相同按 id）依次放置；在所有放入后仍可调度的核心中，
    best-fit 选当前利用率最大者。无核心可用时抛出 PartitionError。
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"未知的划分策略: {strategy}")
    if core_count <= 0:
        if rt_tasks:
            raise PartitionError(rt_tasks[0].id, "没有可用核心")
        return Platform(core_count=max(core_count, 0), rt_partition={})

    if any(t.priority is None for t in rt_tasks):
        rt_tasks = assign_rm_priorities(rt_tasks)

    order = sorted(rt_tasks, key=lambda t: (-t.utilization, t.id))
    cores: List[List[RealTimeTask]] = [[] for _ in range(core_count)]
    loads = [Fraction(0)] * core_count
    partition: Dict[str, int] = {}

    for task in order:
        candidates = [m for m in range(core_count) if core_rt_schedulable(cores[m] + [task])]
        if not candidates:
            logger.debug("实时任务 %s 无法放入任何核心", task.id)
            raise PartitionError(task.id)
        core = _pick_core(candidates, loads, strategy)
        cores[core].append(task)
        loads[core] += task.utilization
        partition[task.id] = core

    return Platform(core_count=core_count, rt_partition=partition)

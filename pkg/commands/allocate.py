"""
allocate 子命令：为任务集计算安全任务分配
"""
import argparse
from pathlib import Path

from allocators import REASON_RT_PARTITION_FAILED, SCHEME_SINGLE_CORE, SCHEMES, allocate
from config import get_settings
from models import PartitionError, SystemConfig
from partitioner import STRATEGIES, best_fit_partition
from schedulability import rt_response_time
from schemas import AllocationFile, dump_model

from commands.common import EXIT_OK, EXIT_UNSCHEDULABLE, ensure_valid, load_taskset, status, write_output

settings = get_settings()


def register(subparsers) -> None:
    parser = subparsers.add_parser("allocate", help="计算安全任务的核心与周期")
    parser.add_argument("taskset_file", type=Path, help="任务集文件（JSON）")
    parser.add_argument("--scheme", choices=SCHEMES, default="hydra", help="分配方案")
    parser.add_argument("--limit", type=int, default=settings.EXHAUSTIVE_LIMIT,
                        help="optimal 方案允许枚举的最大分配数")
    parser.add_argument("--strategy", choices=STRATEGIES, default=settings.PARTITION_STRATEGY,
                        help="实时任务划分策略")
    parser.add_argument("--out", required=True, help="输出文件，'-' 表示 stdout")
    parser.set_defaults(handler=cmd_allocate)


def _rt_failure(scheme: str, config: SystemConfig, task_id: str, hint: str) -> AllocationFile:
    return AllocationFile(
        scheme=scheme,
        status="unschedulable",
        failed_task=task_id,
        reason=REASON_RT_PARTITION_FAILED,
        hint=hint,
        cores=config.core_count,
        rt_partition=dict(config.platform.rt_partition),
        weights_defaulted=config.weights_defaulted,
    )


def _prepare(config: SystemConfig, scheme: str, strategy: str):
    """补全实时任务划分；失败时返回不可调度记录"""
    if scheme == SCHEME_SINGLE_CORE:
        return config, None
    if any(config.platform.core_of(t.id) is None for t in config.rt_tasks):
        try:
            config = config.with_platform(best_fit_partition(config.rt_tasks, config.core_count, strategy))
        except PartitionError as exc:
            hint = f"实时任务 {exc.task_id} 无法放入 {config.core_count} 个核心"
            return config, _rt_failure(scheme, config, exc.task_id, hint)
        return config, None
    for core in range(config.core_count):
        ordered = sorted(config.rt_on_core(core), key=lambda t: (t.priority, t.id))
        for index, task in enumerate(ordered):
            if rt_response_time(task, ordered[:index]) is None:
                hint = f"核心 {core} 上的实时任务 {task.id} 响应时间超过截止期"
                return config, _rt_failure(scheme, config, task.id, hint)
    return config, None


def cmd_allocate(args: argparse.Namespace) -> int:
    taskset, config = load_taskset(args.taskset_file)
    ensure_valid(config, str(args.taskset_file), allow_unpartitioned=taskset.needs_partition())

    config, failure = _prepare(config, args.scheme, args.strategy)
    if failure is None:
        outcome = allocate(config, args.scheme, args.limit, args.strategy)
        record = AllocationFile.from_outcome(outcome)
    else:
        record = failure

    write_output(args.out, dump_model(record))
    if not record.schedulable:
        status(f"❌ {record.scheme} 判定不可调度: {record.reason} {record.failed_task or ''}".rstrip())
        if record.hint:
            status(f"   {record.hint}")
        return EXIT_UNSCHEDULABLE
    status(f"✅ {record.scheme} 分配完成，目标值 {record.objective}")
    return EXIT_OK

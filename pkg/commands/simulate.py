"""
simulate 子命令：按分配结果仿真调度并统计入侵检测时延
"""
import argparse
from pathlib import Path

from config import get_settings
from models import InputError
from reports import (
    DETECTION_HEADER, TRACE_HEADER, detection_rows, fraction_to_decimal, trace_rows, write_csv,
)
from schemas import AllocationFile, CdfPoint, SimulationSummary, load_model, write_model
from simulator import DetectionReport, DetectionRule, inject_attacks, simulate, summarize_detections

from commands.common import ensure_valid, load_taskset, status

settings = get_settings()

MICROSECONDS_PER_SECOND = 1_000_000


def register(subparsers) -> None:
    parser = subparsers.add_parser("simulate", help="仿真调度并统计检测时延")
    parser.add_argument("taskset_file", type=Path, help="任务集文件（JSON）")
    parser.add_argument("allocation_file", type=Path, help="allocate 写出的分配文件")
    parser.add_argument("--duration-s", type=int, default=settings.SIMULATE_DURATION_S, help="仿真时长（秒）")
    parser.add_argument("--attacks", type=int, default=settings.DEFAULT_ATTACKS, help="注入的攻击次数")
    parser.add_argument("--seed", type=int, default=settings.MASTER_SEED, help="攻击注入种子")
    parser.add_argument("--detection-rule", choices=[r.value for r in DetectionRule],
                        default=settings.DETECTION_RULE, help="检测时刻规则")
    parser.add_argument("--grid-points", type=int, default=settings.CDF_GRID_POINTS, help="CDF 网格点数")
    parser.add_argument("--trace", type=Path, default=None, help="事件流 CSV 输出路径")
    parser.add_argument("--out", type=Path, required=True, help="输出目录")
    parser.set_defaults(handler=cmd_simulate)


def cmd_simulate(args: argparse.Namespace) -> int:
    if args.duration_s <= 0:
        raise InputError("--duration-s 必须为正")
    if args.attacks < 0:
        raise InputError("--attacks 不能为负")

    _, config = load_taskset(args.taskset_file)
    record = load_model(AllocationFile, args.allocation_file)
    if not record.schedulable:
        raise InputError(f"{args.allocation_file} 记录的是不可调度结果，无法仿真")
    config = record.effective_config(config)
    ensure_valid(config, str(args.taskset_file))

    allocation = record.to_allocation()
    sec_ids = {t.id for t in config.sec_tasks}
    if set(allocation.assignment) != sec_ids or set(allocation.periods) != sec_ids:
        raise InputError("分配文件中的安全任务与任务集不一致")

    duration = args.duration_s * MICROSECONDS_PER_SECOND
    rule = DetectionRule(args.detection_rule)
    try:
        plan = inject_attacks(config, args.attacks, duration, args.seed)
    except ValueError as exc:
        raise InputError(f"无法注入攻击: {exc}") from exc
    status(f"🚀 仿真 {args.duration_s} s，注入 {len(plan)} 次攻击 ({record.scheme})")
    trace = simulate(config, allocation, duration, plan, rule=rule, record_events=args.trace is not None)

    summary = summarize_detections(DetectionReport(trace.detections, trace.censored), args.grid_points)
    rt_ids = {t.id for t in config.rt_tasks}
    result = SimulationSummary(
        scheme=record.scheme,
        duration_us=duration,
        attacks=len(plan),
        seed=args.seed,
        rule=rule.value,
        count=summary["count"],
        censored=summary["censored"],
        mean_us=fraction_to_decimal(summary["mean_us"]) if summary["mean_us"] is not None else None,
        median_us=fraction_to_decimal(summary["median_us"]) if summary["median_us"] is not None else None,
        max_us=summary["max_us"],
        rt_deadline_misses=sum(n for task, n in trace.deadline_misses.items() if task in rt_ids),
        security_deadline_misses=sum(n for task, n in trace.deadline_misses.items() if task in sec_ids),
        cdf=[CdfPoint(latency_us=x, fraction=fraction_to_decimal(f)) for x, f in summary["cdf"]],
        note=None if summary["count"] else "没有检测样本",
    )

    write_csv(args.out / "detections.csv", DETECTION_HEADER, detection_rows(trace.detections))
    write_model(args.out / "summary.json", result)
    if args.trace is not None:
        write_csv(args.trace, TRACE_HEADER, trace_rows(trace.events))

    if result.rt_deadline_misses or result.security_deadline_misses:
        status(f"⚠️ 仿真中出现截止期错失: 实时 {result.rt_deadline_misses}，安全 {result.security_deadline_misses}")
    status(f"✅ 检测样本 {result.count} 个，删失 {result.censored} 个，结果写入 {args.out}")
    return 0

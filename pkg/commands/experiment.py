"""
experiment 子命令：批量实验，结果写成 CSV
"""
import argparse
import logging
from pathlib import Path

from config import get_settings
from experiments import (
    ACCEPTANCE_HEADER, APPENDIX_CORES, APPENDIX_HEADER, DETECTION_CDF_HEADER, DETECTION_CONFIG_HEADER,
    DETECTION_CORES, DETECTION_IMPROVEMENT_HEADER, DETECTION_SAMPLE_HEADER, SWEEP_CONFIG_HEADER,
    appendix_jobs, detection_jobs, run_appendix_compare, run_detection_cdf, run_schedulability_sweep,
    schedulability_jobs,
)
from models import InputError
from partitioner import STRATEGIES
from reports import write_csv
from simulator import DetectionRule

from commands.common import status

settings = get_settings()
logger = logging.getLogger(__name__)

KINDS = ("appendix-compare", "detection-cdf", "schedulability-sweep")


def register(subparsers) -> None:
    parser = subparsers.add_parser("experiment", help="运行批量实验")
    parser.add_argument("kind", choices=KINDS, help="实验类型")
    parser.add_argument("--out", type=Path, required=True, help="输出目录")
    parser.add_argument("--paper-scale", action="store_true", help="使用完整规模的重复次数与仿真时长")
    parser.add_argument("--replications", type=int, default=None, help="每个配置点的重复次数")
    parser.add_argument("--cores", type=int, nargs="+", default=None, help="核心数（可给多个）")
    parser.add_argument("--seed", type=int, default=settings.MASTER_SEED, help="主种子")
    parser.add_argument("--limit", type=int, default=settings.EXHAUSTIVE_LIMIT, help="穷举上限")
    parser.add_argument("--strategy", choices=STRATEGIES, default=settings.PARTITION_STRATEGY, help="划分策略")
    parser.add_argument("--duration-s", type=int, default=None, help="detection-cdf 的仿真时长（秒）")
    parser.add_argument("--attacks", type=int, default=settings.DEFAULT_ATTACKS, help="每个配置注入的攻击次数")
    parser.add_argument("--detection-rule", choices=[r.value for r in DetectionRule],
                        default=settings.DETECTION_RULE, help="检测时刻规则")
    parser.add_argument("--workers", type=int, default=None, help="工作进程数（默认 SWEEP_WORKERS）")
    parser.set_defaults(handler=cmd_experiment)


def _scale(args: argparse.Namespace):
    replications = args.replications or (
        settings.PAPER_REPLICATIONS if args.paper_scale else settings.DESK_REPLICATIONS
    )
    duration_s = args.duration_s or (
        settings.PAPER_EXPERIMENT_DURATION_S if args.paper_scale else settings.EXPERIMENT_DURATION_S
    )
    if replications <= 0 or duration_s <= 0:
        raise InputError("--replications 与 --duration-s 必须为正")
    if args.cores is not None and any(m <= 0 for m in args.cores):
        raise InputError("--cores 必须为正")
    return replications, duration_s


def cmd_experiment(args: argparse.Namespace) -> int:
    replications, duration_s = _scale(args)
    workers = args.workers or settings.SWEEP_WORKERS
    out: Path = args.out

    if args.kind == "appendix-compare":
        rows = []
        for cores in args.cores or [APPENDIX_CORES]:
            jobs = appendix_jobs(replications, args.seed, args.limit, cores)
            status(f"🚀 appendix-compare: M={cores}，{len(jobs)} 个实例")
            rows.extend(run_appendix_compare(jobs, workers))
        write_csv(out / "appendix_compare.csv", APPENDIX_HEADER, rows)
        done = sum(1 for r in rows if r.get("status") == "ok")
        status(f"✅ {done}/{len(rows)} 个实例两种方案均可调度，结果写入 {out}")
        return 0

    if args.kind == "detection-cdf":
        jobs = detection_jobs(
            replications, args.seed, args.cores or DETECTION_CORES,
            duration=duration_s * 1_000_000, attacks=args.attacks,
            rule=args.detection_rule, strategy=args.strategy,
        )
        status(f"🚀 detection-cdf: {len(jobs)} 个配置，每个仿真 {duration_s} s")
        result = run_detection_cdf(jobs, workers, settings.CDF_GRID_POINTS)
        write_csv(out / "detection_configs.csv", DETECTION_CONFIG_HEADER, result["configs"])
        write_csv(out / "detection_samples.csv", DETECTION_SAMPLE_HEADER, result["samples"])
        write_csv(out / "detection_cdf.csv", DETECTION_CDF_HEADER, result["cdf"])
        write_csv(out / "detection_improvement.csv", DETECTION_IMPROVEMENT_HEADER, result["improvement"])
        for row in result["improvement"]:
            logger.info("M=%d: %d 个配置，平均改进 %s%%", row["cores"], row["configs"],
                        float(row["mean_improvement_percent"]))
        status(f"✅ 结果写入 {out}")
        return 0

    config_rows, acceptance = [], []
    for cores in args.cores or [APPENDIX_CORES]:
        jobs = schedulability_jobs(cores, replications, args.seed, args.strategy)
        status(f"🚀 schedulability-sweep: M={cores}，{len(jobs)} 个实例")
        result = run_schedulability_sweep(jobs, workers)
        config_rows.extend(result["configs"])
        acceptance.extend(result["acceptance"])
    write_csv(out / "sweep_configs.csv", SWEEP_CONFIG_HEADER, config_rows)
    write_csv(out / "acceptance.csv", ACCEPTANCE_HEADER, acceptance)
    status(f"✅ 结果写入 {out}")
    return 0

"""
generate 子命令：按参数文件扫描利用率网格，写出任务集文件与清单
"""
import argparse
import logging
from pathlib import Path

from config import get_settings
from experiments import run_jobs
from models import GenerationError
from reports import fraction_to_decimal
from schemas import ManifestEntry, SweepFile, SweepManifest, TasksetFile, load_model, write_model
from taskgen import GenParams, generate_taskset, sweep_manifest, sweep_params

from commands.common import status

settings = get_settings()
logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("generate", help="生成合成任务集")
    parser.add_argument("params_file", type=Path, help="扫描参数文件（JSON）")
    parser.add_argument("--out", type=Path, required=True, help="输出目录")
    parser.add_argument("--workers", type=int, default=None, help="工作进程数（默认 SWEEP_WORKERS）")
    parser.set_defaults(handler=cmd_generate)


def taskset_filename(point: int, replication: int) -> str:
    return f"taskset_u{point:02d}_r{replication:03d}.json"


def _generate_one(params: GenParams) -> dict:
    try:
        return {"taskset": TasksetFile.from_config(generate_taskset(params))}
    except GenerationError as exc:
        return {"error": str(exc)}


def cmd_generate(args: argparse.Namespace) -> int:
    sweep = load_model(SweepFile, args.params_file)
    sweep.check()
    replications = sweep.replications or settings.DESK_REPLICATIONS

    overrides = {
        "period_distribution": settings.PERIOD_DISTRIBUTION,
        "partition_strategy": settings.PARTITION_STRATEGY,
        "max_redraws": settings.MAX_REDRAWS,
        **sweep.overrides(),
    }
    params_list = sweep_params(sweep.cores, replications, sweep.master_seed, **overrides)
    status(f"🚀 正在生成 {len(params_list)} 个任务集 (M={sweep.cores}, 每点 {replications} 次)")

    results = run_jobs(_generate_one, params_list, args.workers or settings.SWEEP_WORKERS)

    entries = []
    for row, result in zip(sweep_manifest(params_list, replications), results):
        entry = ManifestEntry(
            point=row["point"],
            utilization=fraction_to_decimal(row["utilization"]),
            replication=row["replication"],
            seed=row["seed"],
        )
        if "error" in result:
            entry.status = "generation_failed"
            entry.detail = result["error"]
        else:
            entry.file = taskset_filename(row["point"], row["replication"])
            write_model(args.out / entry.file, result["taskset"])
        entries.append(entry)

    manifest = SweepManifest(
        cores=sweep.cores,
        replications=replications,
        master_seed=sweep.master_seed,
        entries=entries,
    )
    write_model(args.out / "manifest.json", manifest)

    failed = sum(1 for e in entries if e.status != "ok")
    if failed:
        status(f"⚠️ {failed} 个实例在重抽上限内未能生成，详见 manifest.json")
    status(f"✅ 已写出 {len(entries) - failed} 个任务集到 {args.out}")
    return 0

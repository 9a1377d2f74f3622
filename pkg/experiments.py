"""
实验运行器

- appendix-compare：HYDRA 与穷举最优的累计紧密度差 Δη
- detection-cdf：HYDRA 与 SingleCore 的入侵检测时延对比
- schedulability-sweep：各利用率点上两种方案的接受率与平均紧密度

每个实例相互独立，按清单顺序合并结果，输出与并行度无关。
"""
import logging
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from allocators import delta_eta, exhaustive_optimal, hydra_allocate, single_core_allocate
from models import GenerationError, LimitExceededError
from period_opt import cumulative_tightness
from simulator import (
    DetectionRule, empirical_cdf, inject_attacks, mean_detection_improvement, simulate,
)
from taskgen import GenParams, derive_seed, generate_taskset, sweep_params

logger = logging.getLogger(__name__)

APPENDIX_CORES = 2
APPENDIX_SEC_RANGE = (2, 6)
DETECTION_CORES = (2, 4, 8)


@dataclass(frozen=True)
class SweepJob:
    """一个 (配置, 种子) 实例"""
    point: int
    replication: int
    params: GenParams
    limit: int = 1_000_000
    strategy: str = "best-fit"
    duration: int = 0
    attacks: int = 0
    rule: str = DetectionRule.NEXT_RELEASE.value


def run_jobs(func: Callable, jobs: Sequence, workers: int = 1) -> list:
    """在进程池中执行独立任务，结果保持输入顺序"""
    if workers <= 1 or len(jobs) <= 1:
        return [func(job) for job in jobs]
    logger.debug("使用 %d 个工作进程执行 %d 个实例", workers, len(jobs))
    chunksize = max(1, len(jobs) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, jobs, chunksize=chunksize))


def _base_row(job: SweepJob) -> dict:
    return {
        "cores": job.params.cores,
        "point": job.point,
        "utilization": job.params.total_rt_util,
        "normalized_utilization": job.params.total_rt_util / job.params.cores,
        "replication": job.replication,
        "seed": job.params.seed,
    }


def _sweep_jobs(cores: int, replications: int, master_seed: int, **overrides) -> List[SweepJob]:
    params_list = sweep_params(cores, replications, master_seed, **overrides)
    return [
        SweepJob(point=i // replications + 1, replication=i % replications, params=p)
        for i, p in enumerate(params_list)
    ]


# ==================== HYDRA 与最优解对比 ====================

APPENDIX_HEADER = [
    "cores", "point", "utilization", "normalized_utilization", "replication", "seed", "n_sec",
    "hydra_eta", "optimal_eta", "delta_eta_percent", "status",
]


def appendix_jobs(replications: int, master_seed: int = 0, limit: int = 1_000_000,
                  cores: int = APPENDIX_CORES,
                  sec_range: Tuple[int, int] = APPENDIX_SEC_RANGE) -> List[SweepJob]:
    jobs = _sweep_jobs(cores, replications, master_seed, sec_count_range=sec_range)
    return [SweepJob(point=j.point, replication=j.replication, params=j.params, limit=limit) for j in jobs]


def appendix_row(job: SweepJob) -> dict:
    row = _base_row(job)
    try:
        config = generate_taskset(job.params)
    except GenerationError as exc:
        return {**row, "status": "generation_failed", "detail": str(exc)}
    row["n_sec"] = len(config.sec_tasks)

    hydra = hydra_allocate(config)
    try:
        optimal = exhaustive_optimal(config, job.limit)
    except LimitExceededError:
        return {**row, "status": "limit_exceeded"}

    if hydra.schedulable:
        row["hydra_eta"] = cumulative_tightness(hydra.result)
    if optimal.schedulable:
        row["optimal_eta"] = cumulative_tightness(optimal.result)
    row["delta_eta_percent"] = delta_eta(optimal, hydra)
    if row["delta_eta_percent"] is not None:
        row["status"] = "ok"
    elif optimal.schedulable:
        row["status"] = "hydra_unschedulable"
    else:
        row["status"] = "unschedulable"
    return row


def run_appendix_compare(jobs: Sequence[SweepJob], workers: int = 1) -> List[dict]:
    return run_jobs(appendix_row, jobs, workers)


# ==================== 检测时延 ====================

DETECTION_CONFIG_HEADER = [
    "cores", "replication", "seed", "hydra_mean_us", "single_mean_us", "hydra_censored",
    "single_censored", "improvement_percent", "status",
]
DETECTION_SAMPLE_HEADER = ["cores", "replication", "scheme", "attack_time_us", "detect_time_us", "latency_us", "task"]
DETECTION_CDF_HEADER = ["cores", "scheme", "latency_us", "cdf"]
DETECTION_IMPROVEMENT_HEADER = ["cores", "configs", "mean_improvement_percent"]


def detection_jobs(replications: int, master_seed: int = 0, cores_list: Sequence[int] = DETECTION_CORES,
                   utilization_fraction: Fraction = Fraction(1, 2), duration: int = 50_000_000,
                   attacks: int = 100, rule: str = DetectionRule.NEXT_RELEASE.value,
                   strategy: str = "best-fit") -> List[SweepJob]:
    jobs = []
    for cores in cores_list:
        for replication in range(replications):
            params = GenParams(
                cores=cores,
                total_rt_util=utilization_fraction * cores,
                seed=derive_seed(master_seed, cores, 0, replication),
                partition_strategy=strategy,
            )
            jobs.append(SweepJob(point=0, replication=replication, params=params, strategy=strategy,
                                 duration=duration, attacks=attacks, rule=rule))
    return jobs


def detection_run(job: SweepJob) -> dict:
    """同一任务集与攻击计划下分别仿真 HYDRA 与 SingleCore"""
    row = {"cores": job.params.cores, "replication": job.replication, "seed": job.params.seed}
    try:
        config = generate_taskset(job.params)
    except GenerationError as exc:
        return {"row": {**row, "status": "generation_failed"}, "samples": []}

    hydra = hydra_allocate(config)
    single = single_core_allocate(config, job.strategy)
    if not hydra.schedulable or not single.schedulable:
        status = "hydra_unschedulable" if not hydra.schedulable else "single_unschedulable"
        return {"row": {**row, "status": status}, "samples": []}

    rule = DetectionRule(job.rule)
    plan = inject_attacks(config, job.attacks, job.duration, job.params.seed)
    samples = []
    latencies = {}
    for scheme, outcome in (("hydra", hydra), ("single-core", single)):
        trace = simulate(outcome.config, outcome.result, job.duration, plan, rule=rule, record_events=False)
        latencies[scheme] = [s.latency for s in trace.detections]
        row[f"{'hydra' if scheme == 'hydra' else 'single'}_censored"] = trace.censored
        samples.extend({
            "cores": job.params.cores,
            "replication": job.replication,
            "scheme": scheme,
            "attack_time_us": s.attack_time,
            "detect_time_us": s.detect_time,
            "latency_us": s.latency,
            "task": s.detecting_task,
        } for s in trace.detections)

    if latencies["hydra"] and latencies["single-core"]:
        row["hydra_mean_us"] = Fraction(sum(latencies["hydra"]), len(latencies["hydra"]))
        row["single_mean_us"] = Fraction(sum(latencies["single-core"]), len(latencies["single-core"]))
        row["improvement_percent"] = mean_detection_improvement(latencies["hydra"], latencies["single-core"])
        row["status"] = "ok"
    else:
        row["status"] = "no_samples"
    return {"row": row, "samples": samples}


def run_detection_cdf(jobs: Sequence[SweepJob], workers: int = 1,
                      grid_points: int = 20) -> Dict[str, List[dict]]:
    results = run_jobs(detection_run, jobs, workers)
    config_rows = [r["row"] for r in results]
    sample_rows = [s for r in results for s in r["samples"]]

    pooled: Dict[Tuple[int, str], List[int]] = defaultdict(list)
    for sample in sample_rows:
        pooled[(sample["cores"], sample["scheme"])].append(sample["latency_us"])
    cdf_rows = []
    for (cores, scheme), latencies in sorted(pooled.items()):
        top = max(latencies)
        grid = sorted({top * k // grid_points for k in range(1, grid_points + 1)})
        cdf_rows.extend({"cores": cores, "scheme": scheme, "latency_us": x, "cdf": empirical_cdf(latencies, x)}
                        for x in grid)

    improvements: Dict[int, List[Fraction]] = defaultdict(list)
    for row in config_rows:
        if row.get("status") == "ok":
            improvements[row["cores"]].append(row["improvement_percent"])
    improvement_rows = [
        {
            "cores": cores,
            "configs": len(values),
            "mean_improvement_percent": sum(values, Fraction(0)) / len(values) if values else None,
        }
        for cores, values in sorted(improvements.items())
    ]
    return {
        "configs": config_rows,
        "samples": sample_rows,
        "cdf": cdf_rows,
        "improvement": improvement_rows,
    }


# ==================== 可调度性扫描 ====================

SWEEP_CONFIG_HEADER = [
    "cores", "point", "utilization", "normalized_utilization", "replication", "seed",
    "hydra_schedulable", "single_schedulable", "hydra_mean_tightness", "single_mean_tightness", "status",
]
ACCEPTANCE_HEADER = [
    "cores", "point", "utilization", "normalized_utilization", "scheme", "generated", "accepted",
    "acceptance_ratio", "mean_tightness",
]


def schedulability_jobs(cores: int, replications: int, master_seed: int = 0,
                        strategy: str = "best-fit") -> List[SweepJob]:
    jobs = _sweep_jobs(cores, replications, master_seed, partition_strategy=strategy)
    return [SweepJob(point=j.point, replication=j.replication, params=j.params, strategy=strategy) for j in jobs]


def _mean_tightness(outcome) -> Optional[Fraction]:
    if not outcome.schedulable or not outcome.result.tightness:
        return None
    return cumulative_tightness(outcome.result) / len(outcome.result.tightness)


def schedulability_row(job: SweepJob) -> dict:
    row = _base_row(job)
    try:
        config = generate_taskset(job.params)
    except GenerationError:
        return {**row, "status": "generation_failed"}
    hydra = hydra_allocate(config)
    single = single_core_allocate(config, job.strategy)
    row.update({
        "hydra_schedulable": hydra.schedulable,
        "single_schedulable": single.schedulable,
        "hydra_mean_tightness": _mean_tightness(hydra),
        "single_mean_tightness": _mean_tightness(single),
        "status": "ok",
    })
    return row


def acceptance_rows(config_rows: Sequence[dict]) -> List[dict]:
    """按 (核心数, 网格点, 方案) 汇总接受率；生成失败的实例不计入"""
    groups: Dict[Tuple[int, int], List[dict]] = defaultdict(list)
    for row in config_rows:
        if row.get("status") == "ok":
            groups[(row["cores"], row["point"])].append(row)
    rows = []
    for (cores, point), members in sorted(groups.items()):
        for scheme, prefix in (("hydra", "hydra"), ("single-core", "single")):
            accepted = [m for m in members if m[f"{prefix}_schedulable"]]
            tightness = [m[f"{prefix}_mean_tightness"] for m in accepted if m[f"{prefix}_mean_tightness"] is not None]
            rows.append({
                "cores": cores,
                "point": point,
                "utilization": members[0]["utilization"],
                "normalized_utilization": members[0]["normalized_utilization"],
                "scheme": scheme,
                "generated": len(members),
                "accepted": len(accepted),
                "acceptance_ratio": Fraction(len(accepted), len(members)),
                "mean_tightness": sum(tightness, Fraction(0)) / len(tightness) if tightness else None,
            })
    return rows


def run_schedulability_sweep(jobs: Sequence[SweepJob], workers: int = 1) -> Dict[str, List[dict]]:
    config_rows = run_jobs(schedulability_row, jobs, workers)
    return {"configs": config_rows, "acceptance": acceptance_rows(config_rows)}

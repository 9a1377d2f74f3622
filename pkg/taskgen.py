"""
合成任务集生成

利用率由 Stafford 的 RandFixedSum 算法在约束单纯形上均匀抽取；
随机数流为 numpy PCG64，扫描中的每个实例通过 SeedSequence([主种子, M, 点, 重复]) 派生种子。
"""
import logging
import math
from collections import Counter
from fractions import Fraction
from typing import Any, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from models import (
    GenerationError, PartitionError, RealTimeTask, SecurityTask, SystemConfig,
    Platform, assign_rm_priorities, assign_security_priorities, to_fraction, validate_config,
)
from partitioner import STRATEGIES, best_fit_partition
from schedulability import necessary_condition

logger = logging.getLogger(__name__)

PERIOD_DISTRIBUTIONS = ("log-uniform", "uniform")
GRID_POINTS = 39
GRID_STEP = Fraction(1, 40)


# ==================== 生成参数 ====================

class GenParams(BaseModel):
    """单个任务集实例的生成参数"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    cores: int = Field(..., gt=0)
    rt_count_range: Optional[Tuple[int, int]] = None  # 缺省 [3M, 10M]
    sec_count_range: Optional[Tuple[int, int]] = None  # 缺省 [2M, 5M]
    rt_period_range_us: Tuple[int, int] = (10_000, 1_000_000)
    sec_des_period_range_us: Tuple[int, int] = (1_000_000, 3_000_000)
    sec_max_period_factor: int = Field(10, ge=1)
    total_rt_util: Fraction
    sec_util_fraction: Fraction = Fraction(3, 10)
    seed: int = Field(0, ge=0)
    period_distribution: str = "log-uniform"
    partition_strategy: str = "best-fit"
    max_redraws: int = Field(1000, gt=0)

    @field_validator("total_rt_util", "sec_util_fraction", mode="before")
    @classmethod
    def _parse_fraction(cls, value: Any) -> Fraction:
        return to_fraction(value)

    @model_validator(mode="before")
    @classmethod
    def _default_counts(cls, data: Any) -> Any:
        if isinstance(data, dict):
            try:
                cores = int(data.get("cores"))
            except (TypeError, ValueError):
                return data
            data = dict(data)
            if data.get("rt_count_range") is None:
                data["rt_count_range"] = (3 * cores, 10 * cores)
            if data.get("sec_count_range") is None:
                data["sec_count_range"] = (2 * cores, 5 * cores)
        return data

    @model_validator(mode="after")
    def _check_ranges(self) -> "GenParams":
        for name in ("rt_count_range", "sec_count_range", "rt_period_range_us", "sec_des_period_range_us"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name}: 下界 {lo} 大于上界 {hi}")
            if lo <= 0:
                raise ValueError(f"{name}: 下界必须为正")
        if not 0 < self.total_rt_util <= self.cores:
            raise ValueError(f"total_rt_util: 必须位于 (0, {self.cores}]")
        if self.sec_util_fraction < 0:
            raise ValueError("sec_util_fraction: 不能为负")
        if self.period_distribution not in PERIOD_DISTRIBUTIONS:
            raise ValueError(f"period_distribution: 未知分布 {self.period_distribution}")
        if self.partition_strategy not in STRATEGIES:
            raise ValueError(f"partition_strategy: 未知策略 {self.partition_strategy}")
        return self


# ==================== RandFixedSum ====================

def _stafford(n: int, u: float, rng: np.random.Generator) -> np.ndarray:
    """在 [0,1]^n 上均匀抽取和为 u 的向量（Stafford 算法，单组）"""
    k = math.floor(u)
    s = u
    s1 = s - np.arange(k, k - n, -1, dtype=float)
    s2 = np.arange(k + n, k, -1, dtype=float) - s

    tiny = np.finfo(float).tiny
    huge = np.finfo(float).max

    w = np.zeros((n, n + 1))
    w[0, 1] = huge
    t = np.zeros((n - 1, n))
    for i in range(2, n + 1):
        tmp1 = w[i - 2, 1:i + 1] * s1[0:i] / i
        tmp2 = w[i - 2, 0:i] * s2[n - i:n] / i
        w[i - 1, 1:i + 1] = tmp1 + tmp2
        tmp3 = w[i - 1, 1:i + 1] + tiny
        tmp4 = s2[n - i:n] > s1[0:i]
        t[i - 2, 0:i] = (tmp2 / tmp3) * tmp4 + (1 - tmp1 / tmp3) * np.logical_not(tmp4)

    x = np.zeros(n)
    rt = rng.uniform(size=n - 1)  # 单纯形类型
    rs = rng.uniform(size=n - 1)  # 单纯形内位置
    j = k + 1
    sm = 0.0
    pr = 1.0
    for i in range(n - 1, 0, -1):
        e = int(rt[n - i - 1] <= t[i - 1, j - 1])
        sx = rs[n - i - 1] ** (1.0 / i)
        sm = sm + (1 - sx) * pr * s / (i + 1)
        pr = sx * pr
        x[n - i - 1] = sm + pr * e
        s = s - e
        j = j - e
    x[n - 1] = sm + pr * s

    # 按固定维度顺序生成，需随机置换
    return x[rng.permutation(n)]


def _renormalize(values: List[Fraction], total: Fraction, lo: Fraction, hi: Fraction) -> List[Fraction]:
    """截断到 [lo, hi] 后把剩余误差分摊到仍有余量的分量上，使总和精确等于 total"""
    values = [min(max(v, lo), hi) for v in values]
    residual = total - sum(values, Fraction(0))
    for index in range(len(values)):
        if residual == 0:
            break
        room = hi - values[index] if residual > 0 else lo - values[index]
        step = min(residual, room) if residual > 0 else max(residual, room)
        values[index] += step
        residual -= step
    return values


def randfixedsum(n: int, total: Any, lo: Any, hi: Any, rng: np.random.Generator) -> List[Fraction]:
    """返回 n 个位于 [lo, hi]、总和精确为 total 的有理数"""
    total, lo, hi = to_fraction(total), to_fraction(lo), to_fraction(hi)
    if n <= 0:
        raise ValueError("n 必须为正")
    if lo > hi or not n * lo <= total <= n * hi:
        raise ValueError(f"无法在 [{lo}, {hi}] 内抽取 {n} 个和为 {total} 的值")
    if n == 1:
        return [total]
    if lo == hi:
        return [lo] * n

    scaled = float((total - n * lo) / (hi - lo))
    if scaled <= 0:
        unit = np.zeros(n)
    elif scaled >= n:
        unit = np.ones(n)
    else:
        unit = _stafford(n, scaled, rng)

    raw = [lo + (hi - lo) * Fraction(float(v)).limit_denominator(10 ** 12) for v in unit]
    return _renormalize(raw, total, lo, hi)


# ==================== 任务集生成 ====================

def _draw_periods(rng: np.random.Generator, count: int, bounds: Tuple[int, int], distribution: str) -> List[int]:
    lo, hi = bounds
    if distribution == "uniform":
        return [int(p) for p in rng.integers(lo, hi + 1, size=count)]
    samples = np.exp(rng.uniform(math.log(lo), math.log(hi), size=count))
    return [min(max(int(round(p)), lo), hi) for p in samples]


class _UtilizationMismatch(ValueError):
    """取整后无法让实时任务总利用率落在目标值附近"""


def _diffused_wcets(utils: List[Fraction], periods: List[int], total: Fraction,
                    min_period: int) -> Tuple[List[int], List[int]]:
    """
    按周期从小到大取整 WCET 并携带残差

    最长周期的任务吸收剩余利用率：其 (C, T) 取目标利用率在分母不超过原周期时的最佳有理逼近，
    T 可能缩短到原周期的一半以上。总利用率与目标的相对误差超过 1e-6 时抛出 _UtilizationMismatch。
    """
    wcets = [0] * len(utils)
    periods = list(periods)
    order = sorted(range(len(utils)), key=lambda i: (periods[i], i))
    residual = Fraction(0)
    for index in order[:-1]:
        exact = utils[index] * periods[index] + residual * periods[index]
        wcet = min(max(1, round(exact)), periods[index])
        residual = exact / periods[index] - Fraction(wcet, periods[index])
        wcets[index] = wcet

    last = order[-1]
    target = total - sum((Fraction(wcets[i], periods[i]) for i in order[:-1]), Fraction(0))
    if not 0 < target <= 1:
        raise _UtilizationMismatch(f"剩余利用率 {target} 超出 (0, 1]")
    approx = target.limit_denominator(periods[last])
    scale = periods[last] // approx.denominator
    wcet, period = approx.numerator * scale, approx.denominator * scale
    if wcet < 1 or period < min_period:
        raise _UtilizationMismatch(f"最长周期任务无法取整为 ({wcet}, {period})")
    wcets[last], periods[last] = wcet, period

    achieved = sum((Fraction(c, t) for c, t in zip(wcets, periods)), Fraction(0))
    if abs(achieved - total) > total / 10 ** 6:
        raise _UtilizationMismatch(f"取整后总利用率 {float(achieved):.9f} 偏离目标 {float(total):.9f}")
    return wcets, periods


def _draw_instance(params: GenParams, rng: np.random.Generator) -> SystemConfig:
    cores = params.cores
    n_rt = int(rng.integers(params.rt_count_range[0], params.rt_count_range[1] + 1))
    n_sec = int(rng.integers(params.sec_count_range[0], params.sec_count_range[1] + 1))

    rt_utils = randfixedsum(n_rt, params.total_rt_util, 0, 1, rng)
    rt_periods = _draw_periods(rng, n_rt, params.rt_period_range_us, params.period_distribution)
    rt_wcets, rt_periods = _diffused_wcets(rt_utils, rt_periods, params.total_rt_util, params.rt_period_range_us[0])
    rt_tasks = assign_rm_priorities([
        RealTimeTask(id=f"r{i}", wcet=rt_wcets[i], period=rt_periods[i])
        for i in range(n_rt)
    ])

    sec_total = params.sec_util_fraction * params.total_rt_util
    sec_utils = randfixedsum(n_sec, sec_total, 0, 1, rng)
    sec_periods = _draw_periods(rng, n_sec, params.sec_des_period_range_us, "uniform")
    sec_tasks = []
    for i in range(n_sec):
        wcet = min(max(1, round(sec_utils[i] * sec_periods[i])), sec_periods[i])
        sec_tasks.append(SecurityTask(
            id=f"s{i}",
            wcet=wcet,
            desired_period=sec_periods[i],
            max_period=params.sec_max_period_factor * sec_periods[i],
        ))

    platform = best_fit_partition(rt_tasks, cores, params.partition_strategy)
    return SystemConfig(
        platform=platform,
        rt_tasks=rt_tasks,
        sec_tasks=assign_security_priorities(sec_tasks),
        weights_defaulted=True,
    )


def generate_taskset(params: GenParams) -> SystemConfig:
    """按参数抽取任务集，不满足校验或必要条件时重抽"""
    rng = np.random.default_rng(params.seed)
    reasons: Counter = Counter()
    for attempt in range(1, params.max_redraws + 1):
        try:
            config = _draw_instance(params, rng)
        except PartitionError as exc:
            reasons["partition_failed"] += 1
            logger.debug("第 %d 次抽取划分失败: %s", attempt, exc)
            continue
        except _UtilizationMismatch as exc:
            reasons["utilization_mismatch"] += 1
            logger.debug("第 %d 次抽取利用率取整失败: %s", attempt, exc)
            continue
        if validate_config(config):
            reasons["invalid"] += 1
            continue
        if not necessary_condition(config.rt_tasks, params.cores):
            reasons["necessary_condition"] += 1
            continue
        if attempt > 1:
            logger.debug("种子 %d 在第 %d 次抽取时得到合格任务集", params.seed, attempt)
        return config

    logger.warning("种子 %d 在 %d 次重抽后仍失败", params.seed, params.max_redraws)
    raise GenerationError(params.max_redraws, reasons)


# ==================== 参数扫描 ====================

def derive_seed(master_seed: int, cores: int, point: int, replication: int) -> int:
    """由主种子确定性地派生 64 位实例种子"""
    state = np.random.SeedSequence([master_seed, cores, point, replication]).generate_state(1, dtype=np.uint64)
    return int(state[0])


def utilization_grid(cores: int) -> List[Fraction]:
    """0.025M 到 0.975M，步长 0.025M"""
    return [GRID_STEP * cores * k for k in range(1, GRID_POINTS + 1)]


def sweep_params(cores: int, replications: int = 250, master_seed: int = 0,
                 **overrides: Any) -> List[GenParams]:
    """网格点 × 重复次数的参数列表，顺序为 (点, 重复)"""
    params = []
    for point, total in enumerate(utilization_grid(cores), start=1):
        for replication in range(replications):
            params.append(GenParams(
                cores=cores,
                total_rt_util=total,
                seed=derive_seed(master_seed, cores, point, replication),
                **overrides,
            ))
    return params


def sweep_manifest(params_list: List[GenParams], replications: int) -> List[dict]:
    """扫描清单：每个实例的 (网格点, 利用率, 重复序号, 种子)"""
    rows = []
    for index, params in enumerate(params_list):
        rows.append({
            "point": index // replications + 1,
            "utilization": params.total_rt_util,
            "replication": index % replications,
            "seed": params.seed,
        })
    return rows

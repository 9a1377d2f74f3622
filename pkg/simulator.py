"""
划分式固定优先级抢占调度的离散事件仿真

- 实时任务按 RM 优先级执行，安全任务在同核心上严格低于所有实时任务
- 所有任务自 t=0 同步释放并严格周期到达，作业恰好执行 WCET
- 注入合成攻击并统计检测时延
"""
import heapq
import logging
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from models import Allocation, SimulationError, SystemConfig, validate_config
from schedulability import verify_allocation

logger = logging.getLogger(__name__)


class EventKind(str, Enum):
    RELEASE = "release"
    COMPLETION = "completion"
    PREEMPTION = "preemption"
    DEADLINE_MISS = "deadline_miss"
    ATTACK_INJECTED = "attack_injected"
    ATTACK_DETECTED = "attack_detected"


# 同一时刻的处理顺序：完成 → 截止检查 → 攻击 → 释放 → 调度决策
KIND_ORDER = {
    EventKind.COMPLETION: 0,
    EventKind.DEADLINE_MISS: 1,
    EventKind.ATTACK_INJECTED: 2,
    EventKind.RELEASE: 3,
    EventKind.PREEMPTION: 4,
    EventKind.ATTACK_DETECTED: 5,
}


class DetectionRule(str, Enum):
    NEXT_RELEASE = "next-release"  # 攻击时刻及之后释放的第一个作业完成时检测到
    NEXT_COMPLETION = "next-completion"  # 攻击之后第一个完成的作业即检测到


# ==================== 数据类型 ====================

@dataclass(frozen=True)
class SimEvent:
    time: int
    kind: EventKind
    task: str
    core: int


@dataclass(frozen=True)
class AttackEvent:
    time: int
    target: str


@dataclass(frozen=True)
class DetectionSample:
    attack_time: int
    detect_time: int
    detecting_task: str

    @property
    def latency(self) -> int:
        return self.detect_time - self.attack_time


@dataclass
class JobRecord:
    release: int
    deadline: int
    completion: Optional[int] = None


@dataclass
class DetectionReport:
    samples: List[DetectionSample] = field(default_factory=list)
    censored: int = 0

    @property
    def latencies(self) -> List[int]:
        return [s.latency for s in self.samples]


@dataclass
class SimTrace:
    duration: int
    events: List[SimEvent] = field(default_factory=list)
    detections: List[DetectionSample] = field(default_factory=list)
    censored: int = 0
    deadline_misses: Dict[str, int] = field(default_factory=dict)
    jobs: Dict[str, List[JobRecord]] = field(default_factory=dict)
    max_response: Dict[str, int] = field(default_factory=dict)


# ==================== 仿真内部状态 ====================

@dataclass
class _SimTask:
    id: str
    core: int
    wcet: int
    period: int
    key: Tuple[int, int]  # (类别, 序号)，越小优先级越高


@dataclass
class _Job:
    task: _SimTask
    release: int
    remaining: int
    record: JobRecord
    ready_key: tuple = ()
    token: int = 0


@dataclass
class _Core:
    index: int
    ready: list = field(default_factory=list)
    running: Optional[_Job] = None
    last_update: int = 0


_COMPLETION, _DEADLINE, _ATTACK, _RELEASE = 0, 1, 2, 3


def _build_tasks(config: SystemConfig, allocation: Allocation) -> List[_SimTask]:
    tasks = []
    for rt in config.rt_tasks:
        tasks.append(_SimTask(rt.id, config.platform.core_of(rt.id), rt.wcet, rt.period, (0, rt.priority)))
    for sec in config.sec_tasks:
        tasks.append(_SimTask(sec.id, allocation.assignment[sec.id], sec.wcet,
                              allocation.periods[sec.id], (1, sec.priority)))
    return tasks


def _check_inputs(config: SystemConfig, allocation: Allocation) -> None:
    violations = validate_config(config)
    if violations:
        raise SimulationError("配置未通过校验: " + "; ".join(f"{v.code} {v.task or ''}" for v in violations))
    failing = verify_allocation(config, allocation)
    if failing:
        raise SimulationError(f"分配未通过可调度性分析: {', '.join(failing)}")


# ==================== 攻击注入 ====================

def inject_attacks(config: SystemConfig, count: int, duration: int, seed: int) -> List[AttackEvent]:
    """在 (0, duration) 内均匀注入 count 次攻击，每次均匀选择一个安全任务作为目标"""
    if count < 0:
        raise ValueError("攻击次数不能为负")
    if count == 0:
        return []
    if not config.sec_tasks:
        raise ValueError("没有安全任务，无法注入攻击")
    if duration < 2:
        raise ValueError("仿真时长过短")
    rng = np.random.default_rng(seed)
    targets = sorted(t.id for t in config.sec_tasks)
    times = rng.integers(1, duration, size=count)
    picks = rng.integers(0, len(targets), size=count)
    plan = [AttackEvent(int(t), targets[int(p)]) for t, p in zip(times, picks)]
    return sorted(plan, key=lambda a: a.time)


# ==================== 仿真主循环 ====================

def simulate(config: SystemConfig, allocation: Allocation, duration: int,
             attack_plan: Union[Sequence[AttackEvent], int] = (), seed: int = 0,
             rule: DetectionRule = DetectionRule.NEXT_RELEASE,
             record_events: bool = True, check: bool = True) -> SimTrace:
    """
    仿真 [0, duration] 内的调度

    attack_plan 可以是攻击列表，也可以是攻击次数（此时用 seed 调用 inject_attacks）。
    """
    config = config.with_priorities()
    if check:
        _check_inputs(config, allocation)
    if isinstance(attack_plan, int):
        attack_plan = inject_attacks(config, attack_plan, duration, seed)

    tasks = _build_tasks(config, allocation)
    cores = [_Core(m) for m in range(config.core_count)]
    trace = SimTrace(duration=duration)
    for task in tasks:
        trace.jobs[task.id] = []
        trace.deadline_misses[task.id] = 0
    events = trace.events

    queue: list = []
    seq = 0

    def push(time: int, order: int, key: tuple, payload) -> None:
        nonlocal seq
        seq += 1
        heapq.heappush(queue, (time, order, key, seq, payload))

    def emit(time: int, kind: EventKind, task_id: str, core: int) -> None:
        if record_events:
            events.append(SimEvent(time, kind, task_id, core))

    for task in tasks:
        if duration > 0:
            push(0, _RELEASE, task.key, task)
    for attack in attack_plan:
        push(attack.time, _ATTACK, (0, 0), attack)

    def start(core: _Core, job: _Job, now: int) -> None:
        job.token += 1
        core.running = job
        push(now + job.remaining, _COMPLETION, job.task.key, (job, job.token))

    def dispatch(core: _Core, now: int) -> None:
        if not core.ready:
            return
        top_key = core.ready[0][0]
        if core.running is None:
            start(core, heapq.heappop(core.ready)[1], now)
        elif top_key < core.running.ready_key:
            preempted = core.running
            preempted.token += 1  # 使旧的完成事件失效
            heapq.heappush(core.ready, (preempted.ready_key, preempted))
            emit(now, EventKind.PREEMPTION, preempted.task.id, core.index)
            start(core, heapq.heappop(core.ready)[1], now)

    while queue and queue[0][0] <= duration:
        now = queue[0][0]
        for core in cores:
            if core.running is not None:
                core.running.remaining -= now - core.last_update
            core.last_update = now

        touched = set()
        while queue and queue[0][0] == now:
            _, order, _, _, payload = heapq.heappop(queue)
            if order == _COMPLETION:
                job, token = payload
                if token != job.token:
                    continue
                core = cores[job.task.core]
                core.running = None
                job.record.completion = now
                response = now - job.release
                if response > trace.max_response.get(job.task.id, 0):
                    trace.max_response[job.task.id] = response
                emit(now, EventKind.COMPLETION, job.task.id, core.index)
                touched.add(core.index)
            elif order == _DEADLINE:
                job = payload
                if job.record.completion is None:
                    trace.deadline_misses[job.task.id] += 1
                    emit(now, EventKind.DEADLINE_MISS, job.task.id, job.task.core)
            elif order == _ATTACK:
                emit(now, EventKind.ATTACK_INJECTED, payload.target, allocation.assignment[payload.target])
            else:
                task = payload
                record = JobRecord(release=now, deadline=now + task.period)
                trace.jobs[task.id].append(record)
                seq += 1
                job = _Job(task, now, task.wcet, record, ready_key=(task.key, now, seq))
                heapq.heappush(cores[task.core].ready, (job.ready_key, job))
                emit(now, EventKind.RELEASE, task.id, task.core)
                push(now + task.period, _DEADLINE, task.key, job)
                if now + task.period < duration:
                    push(now + task.period, _RELEASE, task.key, task)
                touched.add(task.core)

        for index in sorted(touched):
            dispatch(cores[index], now)

    report = detection_latency(trace, attack_plan, rule)
    trace.detections = report.samples
    trace.censored = report.censored
    if record_events and report.samples:
        for sample in report.samples:
            emit(sample.detect_time, EventKind.ATTACK_DETECTED, sample.detecting_task,
                 allocation.assignment[sample.detecting_task])
        events.sort(key=lambda e: (e.time, KIND_ORDER[e.kind]))
    return trace


# ==================== 检测时延统计 ====================

def detection_latency(trace: SimTrace, attack_plan: Sequence[AttackEvent],
                      rule: DetectionRule = DetectionRule.NEXT_RELEASE) -> DetectionReport:
    """把每次攻击匹配到检测它的作业；作业未在仿真窗口内完成的记为删失"""
    releases: Dict[str, List[int]] = {}
    finished: Dict[str, List[int]] = {}
    for task_id, records in trace.jobs.items():
        releases[task_id] = [r.release for r in records]
        finished[task_id] = [r.completion for r in records if r.completion is not None]

    report = DetectionReport()
    for attack in attack_plan:
        detect_time = None
        if rule == DetectionRule.NEXT_RELEASE:
            records = trace.jobs.get(attack.target, [])
            index = bisect_left(releases.get(attack.target, []), attack.time)
            if index < len(records):
                detect_time = records[index].completion
        else:
            completions = finished.get(attack.target, [])
            index = bisect_right(completions, attack.time)
            if index < len(completions):
                detect_time = completions[index]

        if detect_time is None or detect_time > trace.duration:
            report.censored += 1
            continue
        report.samples.append(DetectionSample(attack.time, detect_time, attack.target))
    return report


def empirical_cdf(samples: Sequence[int], x: int) -> Fraction:
    """F(x) = (1/α) Σ 𝕀[ζ_i ≤ x]"""
    if not samples:
        raise ValueError("样本为空")
    return Fraction(sum(1 for s in samples if s <= x), len(samples))


def _mean(samples: Sequence[int]) -> Fraction:
    return Fraction(sum(samples), len(samples))


def mean_detection_improvement(hydra_samples: Sequence[int], singlecore_samples: Sequence[int]) -> Fraction:
    """(mean(single) − mean(hydra)) / mean(single) × 100"""
    if not hydra_samples or not singlecore_samples:
        raise ValueError("样本为空")
    single = _mean(singlecore_samples)
    if single == 0:
        raise ValueError("SingleCore 平均时延为 0")
    return (single - _mean(hydra_samples)) / single * 100


def summarize_detections(report: DetectionReport, grid_points: int = 20) -> dict:
    """均值、中位数、最大值、删失数以及等距网格上的经验 CDF"""
    latencies = sorted(report.latencies)
    summary = {
        "count": len(latencies),
        "censored": report.censored,
        "mean_us": None,
        "median_us": None,
        "max_us": None,
        "cdf": [],
    }
    if not latencies:
        return summary
    mid = len(latencies) // 2
    median = Fraction(latencies[mid]) if len(latencies) % 2 else Fraction(latencies[mid - 1] + latencies[mid], 2)
    summary.update({
        "mean_us": _mean(latencies),
        "median_us": median,
        "max_us": latencies[-1],
    })
    top = latencies[-1]
    points = max(grid_points, 1)
    grid = sorted({top * k // points for k in range(1, points + 1)})
    summary["cdf"] = [(x, empirical_cdf(latencies, x)) for x in grid]
    return summary

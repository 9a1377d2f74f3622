"""
Pydantic 模型（文件格式模式）

任务集、分配结果、扫描参数、扫描清单与仿真摘要均以 JSON 结构化文本保存。
"""
import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Type, TypeVar, Union

from pydantic import BaseModel, Field, ValidationError

from allocators import AllocationOutcome
from models import (
    Allocation, InputError, Platform, RealTimeTask, SecurityTask, SystemConfig, to_fraction,
)
from reports import fraction_to_decimal, fraction_to_exact
from taskgen import GenParams

ModelT = TypeVar("ModelT", bound=BaseModel)


# ==================== 任务集 ====================

class RTTaskEntry(BaseModel):
    """实时任务条目"""
    id: str
    wcet_us: int = Field(..., ge=0)
    period_us: int = Field(..., ge=0)
    core: Optional[int] = None


class SecTaskEntry(BaseModel):
    """安全任务条目"""
    id: str
    wcet_us: int = Field(..., ge=0)
    desired_period_us: int = Field(..., ge=0)
    max_period_us: int = Field(..., ge=0)
    weight: Optional[Union[int, float, str]] = None


class TasksetFile(BaseModel):
    """任务集文件"""
    cores: int
    rt_tasks: List[RTTaskEntry] = Field(default_factory=list)
    sec_tasks: List[SecTaskEntry] = Field(default_factory=list)

    def needs_partition(self) -> bool:
        """任一实时任务缺少 core 时需要先运行划分器"""
        return any(t.core is None for t in self.rt_tasks)

    def to_config(self) -> SystemConfig:
        rt_tasks = [RealTimeTask(id=t.id, wcet=t.wcet_us, period=t.period_us) for t in self.rt_tasks]
        sec_tasks = [
            SecurityTask(
                id=t.id,
                wcet=t.wcet_us,
                desired_period=t.desired_period_us,
                max_period=t.max_period_us,
                **({} if t.weight is None else {"weight": t.weight}),
            )
            for t in self.sec_tasks
        ]
        partition = {t.id: t.core for t in self.rt_tasks if t.core is not None}
        return SystemConfig(
            platform=Platform(core_count=self.cores, rt_partition=partition),
            rt_tasks=rt_tasks,
            sec_tasks=sec_tasks,
            weights_defaulted=any(t.weight is None for t in self.sec_tasks),
        ).with_priorities()

    @classmethod
    def from_config(cls, config: SystemConfig) -> "TasksetFile":
        return cls(
            cores=config.core_count,
            rt_tasks=[
                RTTaskEntry(id=t.id, wcet_us=t.wcet, period_us=t.period, core=config.platform.core_of(t.id))
                for t in config.rt_tasks
            ],
            sec_tasks=[
                SecTaskEntry(
                    id=t.id,
                    wcet_us=t.wcet,
                    desired_period_us=t.desired_period,
                    max_period_us=t.max_period,
                    weight=None if config.weights_defaulted and t.weight == 1 else _render_weight(t.weight),
                )
                for t in config.sec_tasks
            ],
        )


def _render_weight(weight: Fraction) -> Union[int, str]:
    return weight.numerator if weight.denominator == 1 else fraction_to_exact(weight)


# ==================== 分配结果 ====================

class AllocationFile(BaseModel):
    """分配结果文件（不可调度时记录失败任务与原因）"""
    scheme: str
    status: str  # schedulable / unschedulable
    failed_task: Optional[str] = None
    reason: Optional[str] = None
    hint: Optional[str] = None
    cores: int
    rt_partition: Dict[str, int] = Field(default_factory=dict)
    assignment: Dict[str, int] = Field(default_factory=dict)
    periods_us: Dict[str, int] = Field(default_factory=dict)
    tightness: Dict[str, str] = Field(default_factory=dict)
    tightness_exact: Dict[str, str] = Field(default_factory=dict)
    objective: str = "0"
    objective_exact: str = "0"
    per_core_security_util: List[str] = Field(default_factory=list)
    weights_defaulted: bool = False

    @property
    def schedulable(self) -> bool:
        return self.status == "schedulable"

    @classmethod
    def from_outcome(cls, outcome: AllocationOutcome) -> "AllocationFile":
        allocation = outcome.result or Allocation.empty()
        return cls(
            scheme=outcome.scheme,
            status="schedulable" if outcome.schedulable else "unschedulable",
            failed_task=outcome.failed_task,
            reason=outcome.reason,
            hint=outcome.hint,
            cores=outcome.config.core_count,
            rt_partition=dict(outcome.config.platform.rt_partition),
            assignment=dict(allocation.assignment),
            periods_us=dict(allocation.periods),
            tightness={k: fraction_to_decimal(v) for k, v in allocation.tightness.items()},
            tightness_exact={k: fraction_to_exact(v) for k, v in allocation.tightness.items()},
            objective=fraction_to_decimal(outcome.objective),
            objective_exact=fraction_to_exact(outcome.objective),
            per_core_security_util=[fraction_to_decimal(u) for u in outcome.per_core_security_util],
            weights_defaulted=outcome.config.weights_defaulted,
        )

    def to_allocation(self) -> Allocation:
        return Allocation(
            assignment=dict(self.assignment),
            periods=dict(self.periods_us),
            tightness={k: to_fraction(v) for k, v in self.tightness_exact.items()},
        )

    def effective_config(self, config: SystemConfig) -> SystemConfig:
        """使用分配文件中记录的实时任务划分（SingleCore 会重新划分）"""
        if len(self.rt_partition) != len(config.rt_tasks) and config.rt_tasks:
            raise InputError("分配文件中的实时任务划分与任务集不一致")
        if self.cores != config.core_count:
            raise InputError(f"分配文件核心数 {self.cores} 与任务集核心数 {config.core_count} 不一致")
        return config.with_platform(Platform(core_count=self.cores, rt_partition=dict(self.rt_partition)))


# ==================== 扫描参数与清单 ====================

class SweepFile(BaseModel):
    """cmd_generate 的参数文件"""
    cores: int = Field(..., gt=0)
    replications: Optional[int] = Field(None, gt=0)
    master_seed: int = 0
    rt_count_range: Optional[Tuple[int, int]] = None
    sec_count_range: Optional[Tuple[int, int]] = None
    rt_period_range_us: Optional[Tuple[int, int]] = None
    sec_des_period_range_us: Optional[Tuple[int, int]] = None
    sec_max_period_factor: Optional[int] = None
    sec_util_fraction: Optional[Union[int, float, str]] = None
    period_distribution: Optional[str] = None
    partition_strategy: Optional[str] = None
    max_redraws: Optional[int] = None

    def overrides(self) -> Dict[str, Any]:
        """传给 GenParams 的非空覆盖项"""
        skip = {"cores", "replications", "master_seed"}
        return {k: v for k, v in self.model_dump().items() if k not in skip and v is not None}

    def check(self) -> None:
        """用第一个网格点构造一次 GenParams，提前暴露字段错误"""
        data = {"cores": self.cores, "total_rt_util": Fraction(self.cores, 40), **self.overrides()}
        parse_model(GenParams, data, "参数文件")


class ManifestEntry(BaseModel):
    file: Optional[str] = None
    point: int
    utilization: str
    replication: int
    seed: int
    status: str = "ok"
    detail: Optional[str] = None


class SweepManifest(BaseModel):
    cores: int
    replications: int
    master_seed: int
    entries: List[ManifestEntry] = Field(default_factory=list)


# ==================== 仿真摘要 ====================

class CdfPoint(BaseModel):
    latency_us: int
    fraction: str


class SimulationSummary(BaseModel):
    scheme: str
    duration_us: int
    attacks: int
    seed: int
    rule: str
    count: int
    censored: int
    mean_us: Optional[str] = None
    median_us: Optional[str] = None
    max_us: Optional[int] = None
    rt_deadline_misses: int = 0
    security_deadline_misses: int = 0
    cdf: List[CdfPoint] = Field(default_factory=list)
    note: Optional[str] = None


# ==================== 读写工具 ====================

def describe_error(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        location = ".".join(str(p) for p in item["loc"]) or "(root)"
        parts.append(f"{location}: {item['msg']}")
    return "; ".join(parts)


def parse_model(model: Type[ModelT], data: Any, source: str = "输入") -> ModelT:
    """校验数据，失败时转换为指明字段的 InputError"""
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        raise InputError(f"{source} 格式错误: {describe_error(exc)}") from exc


def load_json(path: Path) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise InputError(f"文件不存在: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} 不是合法 JSON: {exc}") from exc


def load_model(model: Type[ModelT], path: Path) -> ModelT:
    return parse_model(model, load_json(path), str(path))


def dump_model(model: BaseModel) -> str:
    """字段顺序固定，重复运行输出逐字节一致"""
    return model.model_dump_json(indent=2) + "\n"


def write_model(path: Path, model: BaseModel) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_model(model), encoding="utf-8")

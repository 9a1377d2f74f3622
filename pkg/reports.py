"""
结果输出：有理数的十进制渲染与 CSV 写出
"""
import csv
import io
from decimal import Decimal, localcontext
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence

from simulator import DetectionSample, SimEvent

DECIMAL_DIGITS = 15

TRACE_HEADER = ["time_us", "kind", "task", "core"]
DETECTION_HEADER = ["attack_time_us", "detect_time_us", "latency_us", "task"]


def fraction_to_decimal(value: Optional[Any], digits: int = DECIMAL_DIGITS) -> str:
    """有理数渲染为十进制字符串，保留 digits 位有效数字；None 渲染为空串"""
    if value is None:
        return ""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    with localcontext() as ctx:
        ctx.prec = digits
        number = Decimal(value.numerator) / Decimal(value.denominator)
    return format(number, "f")


def fraction_to_exact(value: Fraction) -> str:
    """精确表示 'p/q'（整数时只有 p）"""
    value = Fraction(value)
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


def render_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, Fraction):
        return fraction_to_decimal(value)
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[dict]) -> str:
    """按表头顺序渲染 CSV 文本（始终带表头）"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([render_cell(row.get(column)) for column in header])
    return buffer.getvalue()


def write_csv(path: Path, header: Sequence[str], rows: Iterable[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(header, rows), encoding="utf-8")


def trace_rows(events: List[SimEvent]) -> List[dict]:
    return [
        {"time_us": e.time, "kind": e.kind.value, "task": e.task, "core": e.core}
        for e in events
    ]


def detection_rows(samples: List[DetectionSample]) -> List[dict]:
    return [
        {
            "attack_time_us": s.attack_time,
            "detect_time_us": s.detect_time,
            "latency_us": s.latency,
            "task": s.detecting_task,
        }
        for s in samples
    ]

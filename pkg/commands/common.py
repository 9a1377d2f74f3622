"""
子命令共用的加载、校验与输出工具
"""
import sys
from pathlib import Path
from typing import Tuple

from pydantic import ValidationError

from models import InputError, SystemConfig, validate_config
from schemas import TasksetFile, describe_error, load_model

UNPARTITIONED = "unpartitioned real-time task"

# 退出码
EXIT_OK = 0
EXIT_UNSCHEDULABLE = 1
EXIT_INPUT_ERROR = 2
EXIT_LIMIT_EXCEEDED = 3


def status(message: str) -> None:
    """面向用户的状态行写到 stderr，数据文件不经过 stdout"""
    print(message, file=sys.stderr)


def load_taskset(path: Path) -> Tuple[TasksetFile, SystemConfig]:
    taskset = load_model(TasksetFile, path)
    try:
        return taskset, taskset.to_config()
    except ValidationError as exc:
        raise InputError(f"{path} 格式错误: {describe_error(exc)}") from exc


def ensure_valid(config: SystemConfig, source: str, allow_unpartitioned: bool = False) -> None:
    """配置存在违例时抛出 InputError，列出全部违例"""
    violations = [
        v for v in validate_config(config)
        if not (allow_unpartitioned and v.code == UNPARTITIONED)
    ]
    if violations:
        details = "; ".join(f"{v.code}{f' ({v.task})' if v.task else ''}: {v.detail}" for v in violations)
        raise InputError(f"{source} 校验失败: {details}")


def write_output(target: str, text: str) -> None:
    """target 为 '-' 时写到 stdout，否则写文件"""
    if target == "-":
        sys.stdout.write(text)
        return
    path = Path(target)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")

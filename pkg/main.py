"""
多核实时系统安全任务分配工具
提供任务集生成、分配、仿真与批量实验的命令行接口

退出码：0 成功，1 分析判定不可调度，2 输入错误，3 超出内部上限
"""
import argparse
import logging
import sys
from typing import List, Optional

from config import get_settings
from models import HydraError, InputError, LimitExceededError, SimulationError

from commands import allocate, experiment, generate, simulate
from commands.common import EXIT_INPUT_ERROR, EXIT_LIMIT_EXCEEDED, EXIT_OK, EXIT_UNSCHEDULABLE

settings = get_settings()
logger = logging.getLogger("hydra")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hydra",
        description="分区固定优先级多核系统上的安全任务分配与检测时延评估",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="输出调试日志")
    subparsers = parser.add_subparsers(dest="command", required=True)

    # 注册子命令
    generate.register(subparsers)
    allocate.register(subparsers)
    simulate.register(subparsers)
    experiment.register(subparsers)
    return parser


def configure_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO)
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)

    try:
        return args.handler(args)
    except InputError as e:
        print(f"❌ 输入错误: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except SimulationError as e:
        print(f"❌ 仿真输入不一致: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except LimitExceededError as e:
        print(f"❌ 超出上限: {e}", file=sys.stderr)
        return EXIT_LIMIT_EXCEEDED
    except HydraError as e:
        logger.exception("内部错误")
        print(f"❌ 内部错误: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())

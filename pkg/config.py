"""
配置文件
"""
from pydantic_settings import BaseSettings
from functools import lru_cache


class Settings(BaseSettings):
    """应用配置"""
    # 日志
    LOG_LEVEL: str = "INFO"

    # 并行实验的工作进程数（1 表示在当前进程内顺序执行）
    SWEEP_WORKERS: int = 1

    # 随机种子
    MASTER_SEED: int = 0

    # 实验规模（桌面规模默认值，--paper-scale 切换为完整规模）
    DESK_REPLICATIONS: int = 25
    PAPER_REPLICATIONS: int = 250
    EXPERIMENT_DURATION_S: int = 50
    PAPER_EXPERIMENT_DURATION_S: int = 500

    # 仿真
    SIMULATE_DURATION_S: int = 500
    DEFAULT_ATTACKS: int = 100
    DETECTION_RULE: str = "next-release"  # next-release / next-completion
    CDF_GRID_POINTS: int = 20

    # 分析与搜索上限
    EXHAUSTIVE_LIMIT: int = 1_000_000
    MAX_REDRAWS: int = 1000

    # 任务集生成
    PARTITION_STRATEGY: str = "best-fit"  # best-fit / first-fit / worst-fit
    PERIOD_DISTRIBUTION: str = "log-uniform"  # log-uniform / uniform

    class Config:
        env_prefix = ""
        env_file = ".env"
        extra = "allow"


@lru_cache()
def get_settings():
    return Settings()

import json
from fractions import Fraction

import pytest

from taskgen import GenParams, generate_taskset


@pytest.fixture(scope="session")
def generated_configs():
    """若干个不同核心数与利用率的合成配置"""
    configs = []
    for seed, (cores, util) in enumerate([(2, Fraction(1, 2)), (2, Fraction(6, 5)), (4, Fraction(2)),
                                          (4, Fraction(11, 4)), (8, Fraction(4))]):
        configs.append(generate_taskset(GenParams(cores=cores, total_rt_util=util, seed=seed)))
    return configs


@pytest.fixture
def write_json(tmp_path):
    def write(name, data):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path
    return write


@pytest.fixture
def small_taskset():
    """两个核心、已划分、HYDRA 可调度的任务集"""
    return {
        "cores": 2,
        "rt_tasks": [
            {"id": "r0", "wcet_us": 2000, "period_us": 10000, "core": 0},
            {"id": "r1", "wcet_us": 9000, "period_us": 10000, "core": 1},
        ],
        "sec_tasks": [
            {"id": "s0", "wcet_us": 1000, "desired_period_us": 10000, "max_period_us": 100000},
            {"id": "s1", "wcet_us": 2000, "desired_period_us": 20000, "max_period_us": 200000},
        ],
    }

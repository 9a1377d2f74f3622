from fractions import Fraction

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import stats

from models import GenerationError, validate_config
from schedulability import necessary_condition
from taskgen import (
    GenParams, derive_seed, generate_taskset, randfixedsum, sweep_manifest, sweep_params, utilization_grid,
)


def test_randfixedsum_single_component():
    assert randfixedsum(1, Fraction(1, 2), 0, 1, np.random.default_rng(0)) == [Fraction(1, 2)]


def test_randfixedsum_near_the_upper_corner():
    rng = np.random.default_rng(1)
    for _ in range(200):
        values = randfixedsum(3, Fraction(29, 10), 0, 1, rng)
        assert sum(values) == Fraction(29, 10)
        assert all(Fraction(9, 10) <= v <= 1 for v in values)


def test_randfixedsum_bounds_and_exact_sum():
    rng = np.random.default_rng(2)
    for n in (2, 5, 17):
        for total in (Fraction(1, 10), Fraction(n, 2), Fraction(n) - Fraction(1, 100)):
            values = randfixedsum(n, total, 0, 1, rng)
            assert len(values) == n
            assert sum(values) == total
            assert all(0 <= v <= 1 for v in values)


def test_randfixedsum_with_shifted_bounds():
    values = randfixedsum(4, 2, Fraction(1, 4), Fraction(3, 4), np.random.default_rng(3))
    assert sum(values) == 2
    assert all(Fraction(1, 4) <= v <= Fraction(3, 4) for v in values)


@pytest.mark.parametrize("n, total", [(2, 3), (0, 0), (3, -1)])
def test_randfixedsum_rejects_infeasible_requests(n, total):
    with pytest.raises(ValueError):
        randfixedsum(n, total, 0, 1, np.random.default_rng(0))


def _first_components(draws, seed):
    rng = np.random.default_rng(seed)
    return [float(randfixedsum(2, 1, 0, 1, rng)[0]) for _ in range(draws)]


def test_randfixedsum_first_component_is_uniform():
    assert stats.kstest(_first_components(5_000, 4), "uniform").pvalue > 0.01


@pytest.mark.slow
def test_randfixedsum_first_component_is_uniform_at_scale():
    assert stats.kstest(_first_components(100_000, 6), "uniform").pvalue > 0.01


def test_generate_taskset_structure():
    params = GenParams(cores=2, total_rt_util=Fraction(1, 10), seed=42)
    config = generate_taskset(params)
    assert 6 <= len(config.rt_tasks) <= 20
    assert 4 <= len(config.sec_tasks) <= 10
    assert validate_config(config) == []
    assert necessary_condition(config.rt_tasks, 2)
    assert config.weights_defaulted

    for task in config.rt_tasks:
        assert 10_000 <= task.period <= 1_000_000
    for task in config.sec_tasks:
        assert 1_000_000 <= task.desired_period <= 3_000_000
        assert task.max_period == 10 * task.desired_period


def test_generated_utilization_matches_target():
    cases = [(2, Fraction(1, 10)), (2, Fraction(1, 20)), (2, Fraction(1)), (2, Fraction(3, 2)), (4, Fraction(13, 5))]
    for seed, (cores, total) in enumerate(cases):
        for offset in range(3):
            params = GenParams(cores=cores, total_rt_util=total, seed=10 * seed + offset)
            config = generate_taskset(params)
            assert abs(config.rt_utilization() - total) <= total / 10 ** 6
            for task in config.rt_tasks:
                assert 10_000 <= task.period <= 1_000_000
                assert 1 <= task.wcet <= task.period


def test_generate_taskset_is_deterministic():
    params = GenParams(cores=4, total_rt_util=Fraction(3, 2), seed=9)
    assert generate_taskset(params) == generate_taskset(params)
    assert generate_taskset(params) != generate_taskset(params.model_copy(update={"seed": 10}))


def test_uniform_period_distribution():
    params = GenParams(cores=2, total_rt_util=Fraction(1, 2), seed=3, period_distribution="uniform")
    assert validate_config(generate_taskset(params)) == []


def test_redraw_limit_reports_diagnostics():
    # 三个利用率之和为 2 的任务无法划分到两个核心
    params = GenParams(cores=2, total_rt_util=2, rt_count_range=(3, 3), max_redraws=5, seed=0)
    with pytest.raises(GenerationError) as info:
        generate_taskset(params)
    assert info.value.attempts == 5
    assert info.value.reasons == {"partition_failed": 5}


def test_default_count_ranges_scale_with_cores():
    params = GenParams(cores=3, total_rt_util=1)
    assert params.rt_count_range == (9, 30)
    assert params.sec_count_range == (6, 15)


@pytest.mark.parametrize("field, data", [
    ("rt_period_range_us", {"rt_period_range_us": (1000, 10)}),
    ("sec_count_range", {"sec_count_range": (5, 2)}),
    ("total_rt_util", {"total_rt_util": 3}),
    ("period_distribution", {"period_distribution": "normal"}),
    ("partition_strategy", {"partition_strategy": "random-fit"}),
])
def test_invalid_params_name_the_field(field, data):
    with pytest.raises(ValidationError, match=field):
        GenParams(**{"cores": 2, "total_rt_util": 1, **data})


def test_utilization_grid():
    grid = utilization_grid(2)
    assert len(grid) == 39
    assert grid[0] == Fraction(1, 20)
    assert grid[1] == Fraction(1, 10)
    assert grid[-1] == Fraction(39, 20)


def test_sweep_params_sizes():
    assert len(sweep_params(2, replications=10)) == 390
    assert len(sweep_params(8)) == 9750


def test_sweep_params_order_and_seeds():
    params = sweep_params(2, replications=3, master_seed=5)
    assert [p.total_rt_util for p in params[:4]] == [Fraction(1, 20)] * 3 + [Fraction(1, 10)]
    assert params[0].seed == derive_seed(5, 2, 1, 0)
    assert len({p.seed for p in params}) == len(params)
    assert sweep_params(2, replications=3, master_seed=5) == params

    rows = sweep_manifest(params, 3)
    assert rows[4] == {"point": 2, "utilization": Fraction(1, 10), "replication": 1, "seed": params[4].seed}


def test_sweep_params_forward_overrides():
    params = sweep_params(2, replications=1, sec_count_range=(2, 6))
    assert all(p.sec_count_range == (2, 6) for p in params)

import numpy as np
import pytest

from builders import rt
from models import PartitionError, RealTimeTask
from partitioner import best_fit_partition
from schedulability import core_rt_schedulable, necessary_condition


def _cores(platform, tasks):
    return [[t for t in tasks if platform.core_of(t.id) == m] for m in range(platform.core_count)]


def test_tasks_that_cannot_share_go_to_separate_cores():
    platform = best_fit_partition([rt("a", 600, 1000), rt("b", 600, 1000)], 2)
    assert platform.rt_partition == {"a": 0, "b": 1}


@pytest.mark.parametrize("strategy, expected", [
    ("best-fit", {"c": 0, "a": 0, "b": 0}),
    ("first-fit", {"c": 0, "a": 0, "b": 0}),
    ("worst-fit", {"c": 0, "a": 1, "b": 1}),
])
def test_placement_order_and_strategy(strategy, expected):
    tasks = [rt("a", 300, 1000), rt("b", 200, 1000), rt("c", 400, 1000)]
    assert best_fit_partition(tasks, 2, strategy).rt_partition == expected


def test_best_fit_prefers_the_fullest_admitting_core():
    # b 只能放进核心 1；c 两个核心都能放下，选负载更大的核心 0
    tasks = [rt("a", 900, 1000), rt("b", 500, 1000), rt("c", 100, 1000)]
    assert best_fit_partition(tasks, 2).rt_partition == {"a": 0, "b": 1, "c": 0}
    assert best_fit_partition(tasks, 2, "worst-fit").rt_partition == {"a": 0, "b": 1, "c": 1}


def test_overloaded_single_core_fails():
    with pytest.raises(PartitionError) as info:
        best_fit_partition([rt("a", 950, 1000), rt("b", 950, 1000)], 1)
    assert info.value.task_id == "b"


def test_no_cores():
    with pytest.raises(PartitionError):
        best_fit_partition([rt("a", 1, 10)], 0)
    assert best_fit_partition([], 0).rt_partition == {}


def test_unknown_strategy():
    with pytest.raises(ValueError):
        best_fit_partition([rt("a", 1, 10)], 1, "next-fit")


@pytest.mark.parametrize("strategy", ["best-fit", "first-fit", "worst-fit"])
def test_every_partition_passes_response_time_analysis(strategy):
    rng = np.random.default_rng(5)
    for _ in range(50):
        tasks = []
        for i in range(int(rng.integers(2, 12))):
            period = int(rng.integers(10, 1000))
            tasks.append(rt(f"t{i}", int(rng.integers(1, period // 2 + 1)), period))
        cores = int(rng.integers(1, 5))
        try:
            platform = best_fit_partition(tasks, cores, strategy)
        except PartitionError:
            continue
        assert set(platform.rt_partition) == {t.id for t in tasks}
        for members in _cores(platform, tasks):
            assert core_rt_schedulable(members)


def test_successful_partition_satisfies_the_demand_bound():
    rng = np.random.default_rng(17)
    periods = [100, 200, 250, 400, 500, 1000]
    partitioned = 0
    for _ in range(200):
        tasks = []
        for i in range(int(rng.integers(2, 14))):
            period = int(rng.choice(periods))
            wcet = int(rng.integers(1, period // 2 + 1))
            deadline = int(rng.integers(wcet, period + 1))
            tasks.append(RealTimeTask(id=f"t{i}", wcet=wcet, period=period, deadline=deadline))
        cores = int(rng.integers(1, 5))
        try:
            best_fit_partition(tasks, cores)
        except PartitionError:
            continue
        partitioned += 1
        assert necessary_condition(tasks, cores)
    assert partitioned > 20

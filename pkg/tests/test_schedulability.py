import logging
import math
from fractions import Fraction

import numpy as np
import pytest

from builders import MS, rt, sec, system
from models import Allocation, AllocationOrderError, RealTimeTask
from schedulability import (
    core_rt_schedulable, dbf, hyperperiod, interference, interference_bound, necessary_condition,
    rt_response_time, security_schedulable, verify_allocation,
)


def brute_dbf(task, t):
    """枚举释放与截止都落在 [0, t] 内的作业"""
    demand, release = 0, 0
    while release + task.deadline <= t:
        demand += task.wcet
        release += task.period
    return demand


@pytest.mark.parametrize("t, expected", [(5 * MS, 2 * MS), (4 * MS, 0), (12 * MS, 4 * MS), (0, 0)])
def test_dbf(t, expected):
    assert dbf(rt("a", 2 * MS, 5 * MS), t) == expected


def test_dbf_matches_job_enumeration():
    rng = np.random.default_rng(7)
    for _ in range(200):
        period = int(rng.integers(1, 50))
        deadline = int(rng.integers(1, period + 1))
        task = RealTimeTask(id="a", wcet=int(rng.integers(1, deadline + 1)), period=period, deadline=deadline)
        for t in range(0, 3 * period):
            assert dbf(task, t) == brute_dbf(task, t)


def test_dbf_at_period_multiples():
    task = rt("a", 3, 7)
    assert [dbf(task, k * 7) for k in range(6)] == [3 * k for k in range(6)]


def test_necessary_condition_examples():
    assert necessary_condition([rt("a", MS, 2 * MS)], 1, 2 * MS)
    assert not necessary_condition([rt(f"t{i}", MS, 2 * MS) for i in range(3)], 1, 2 * MS)
    assert necessary_condition([], 3, 10)


def test_necessary_condition_rejects_empty_horizon():
    with pytest.raises(ValueError):
        necessary_condition([rt("a", 1, 2)], 1, 0)


def test_necessary_condition_matches_brute_force():
    rng = np.random.default_rng(11)
    periods = [10, 20, 25, 40, 50, 100]
    for _ in range(100):
        tasks = []
        for i in range(int(rng.integers(1, 6))):
            period = int(rng.choice(periods))
            deadline = int(rng.integers(1, period + 1))
            wcet = int(rng.integers(1, deadline + 1))
            tasks.append(RealTimeTask(id=f"t{i}", wcet=wcet, period=period, deadline=deadline))
        cores = int(rng.integers(1, 3))
        horizon = hyperperiod(t.period for t in tasks)
        expected = all(sum(brute_dbf(t, x) for t in tasks) <= cores * x for x in range(1, horizon + 1))
        assert necessary_condition(tasks, cores, horizon) == expected


def test_implicit_deadline_fast_path_skips_the_hyperperiod(caplog):
    tasks = [rt("a", 1, 999_983), rt("b", 1, 999_979), rt("c", 1, 999_961)]
    with caplog.at_level(logging.WARNING):
        assert necessary_condition(tasks, 1)
    assert not caplog.records


def test_hyperperiod():
    assert hyperperiod([4, 6, 10]) == 60
    assert hyperperiod([7, 11, 13], cap=100) == 100


def test_interference_on_empty_core_is_zero():
    task = sec("s", MS, 10 * MS, 100 * MS)
    config = system(2, [rt("r", 2 * MS, 10 * MS)], [task])
    assert interference(task, 1, config, Allocation.empty(), 10 * MS) == 0


def test_interference_from_rt_task():
    task = sec("s", MS, 10 * MS, 100 * MS)
    config = system(1, [rt("r", 2 * MS, 10 * MS)], [task])
    assert interference(task, 0, config, Allocation.empty(), 10 * MS) == 4 * MS


def test_interference_includes_higher_priority_security_task():
    config = system(1, [rt("r", 2 * MS, 10 * MS)],
                    [sec("h", MS, 20 * MS, 20 * MS), sec("s", MS, 10 * MS, 100 * MS)])
    allocation = Allocation.empty().with_task(config.security_task("h"), 0, 20 * MS)
    task = config.security_task("s")
    assert interference(task, 0, config, allocation, 10 * MS) == Fraction(5500)

    bound = interference_bound(task, 0, config, allocation, 10 * MS)
    assert (bound.intercept, bound.slope) == (3 * MS, Fraction(1, 5) + Fraction(1, 20))


def test_interference_ignores_lower_priority_and_other_cores():
    config = system(2, [], [sec("h", MS, 20 * MS, 20 * MS), sec("s", MS, 10 * MS, 100 * MS)])
    allocation = Allocation.empty().with_task(config.security_task("s"), 0, 10 * MS)
    assert interference(config.security_task("h"), 0, config, allocation, 20 * MS) == 0

    allocation = Allocation.empty().with_task(config.security_task("h"), 1, 20 * MS)
    assert interference(config.security_task("s"), 0, config, allocation, 10 * MS) == 0


def test_interference_requires_higher_priority_period():
    config = system(1, [], [sec("h", MS, 20 * MS, 20 * MS), sec("s", MS, 10 * MS, 100 * MS)])
    allocation = Allocation.empty().with_assignment({"h": 0})
    with pytest.raises(AllocationOrderError):
        interference(config.security_task("s"), 0, config, allocation, 10 * MS)


def test_interference_grows_with_period_and_load():
    rng = np.random.default_rng(13)
    for _ in range(50):
        rt_tasks = [rt(f"r{i}", int(rng.integers(1, 5)) * MS, int(rng.integers(10, 50)) * MS)
                    for i in range(int(rng.integers(0, 4)))]
        higher = [sec(f"h{i}", MS, int(d) * MS, 2 * int(d) * MS)
                  for i, d in enumerate(rng.integers(10, 50, size=int(rng.integers(0, 3))))]
        target = sec("s", MS, 100 * MS, 1000 * MS)
        base = system(1, rt_tasks, higher + [target])
        loaded = system(1, rt_tasks + [rt("extra", MS, 20 * MS)], higher + [target])
        allocation = Allocation.empty()
        for task in higher:
            allocation = allocation.with_task(base.security_task(task.id), 0, task.desired_period)

        periods = sorted({int(p) for p in rng.integers(100 * MS, 1000 * MS, size=10)})
        values = [interference(base.security_task("s"), 0, base, allocation, p) for p in periods]
        assert values == sorted(values)
        for period, value in zip(periods, values):
            assert interference(loaded.security_task("s"), 0, loaded, allocation, period) >= value


@pytest.mark.parametrize("rt_tasks, wcet, period, expected", [
    ([], MS, 5 * MS, True),
    ([rt("r", 2 * MS, 10 * MS)], MS, 10 * MS, True),
    ([rt("r", 6 * MS, 10 * MS)], MS, 10 * MS, False),
])
def test_security_schedulable(rt_tasks, wcet, period, expected):
    task = sec("s", wcet, period, 10 * period)
    config = system(1, rt_tasks, [task])
    assert security_schedulable(config.security_task("s"), 0, config, Allocation.empty(), period) == expected


def test_verify_allocation_reports_failing_and_missing_tasks():
    config = system(1, [rt("r", 6 * MS, 10 * MS)], [sec("a", MS, 10 * MS, 100 * MS), sec("b", MS, 10 * MS, 200 * MS)])
    allocation = Allocation.empty().with_task(config.security_task("a"), 0, 10 * MS)
    assert verify_allocation(config, allocation) == ["a", "b"]

    allocation = Allocation.empty().with_task(config.security_task("a"), 0, 100 * MS)
    assert verify_allocation(config, allocation) == ["b"]


@pytest.mark.parametrize("task, cohabitants, expected", [
    (rt("a", 3 * MS, 10 * MS), [], 3 * MS),
    (rt("a", 2 * MS, 10 * MS), [rt("h", MS, 4 * MS)], 3 * MS),
    (rt("a", 5 * MS, 10 * MS), [rt("h", 4 * MS, 6 * MS)], None),
])
def test_rt_response_time(task, cohabitants, expected):
    assert rt_response_time(task, cohabitants) == expected


def test_core_rt_schedulable():
    assert core_rt_schedulable([rt("a", 1, 4), rt("b", 2, 6)])
    assert not core_rt_schedulable([rt("a", 3, 4), rt("b", 2, 6)])


def test_response_time_is_the_least_fixed_point():
    rng = np.random.default_rng(3)
    for _ in range(200):
        hp = [rt(f"h{i}", int(rng.integers(1, 5)), int(rng.integers(5, 30))) for i in range(int(rng.integers(0, 4)))]
        task = rt("a", int(rng.integers(1, 10)), 60)
        response = rt_response_time(task, hp)
        # 直接扫描第一个满足 R = C + Σ ceil(R/T)·C 的点
        expected = next(
            (r for r in range(1, task.deadline + 1)
             if task.wcet + sum(math.ceil(r / h.period) * h.wcet for h in hp) == r),
            None,
        )
        assert response == expected

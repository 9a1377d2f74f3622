import pickle
from fractions import Fraction
from statistics import median

import pytest

from experiments import (
    APPENDIX_HEADER, DETECTION_CORES, SweepJob, acceptance_rows, appendix_jobs, appendix_row, detection_jobs,
    detection_run, run_appendix_compare, run_detection_cdf, run_jobs, run_schedulability_sweep,
    schedulability_jobs,
)
from reports import csv_text
from taskgen import GenParams, derive_seed


def test_run_jobs_keeps_input_order():
    values = [3, -1, 2, -7, 0, 5]
    assert run_jobs(abs, values) == [3, 1, 2, 7, 0, 5]
    assert run_jobs(abs, values * 4, workers=2) == [abs(v) for v in values * 4]


def test_appendix_jobs_cover_the_grid():
    jobs = appendix_jobs(replications=2, master_seed=1)
    assert len(jobs) == 78
    assert jobs[0].point == 1 and jobs[1].point == 1 and jobs[2].point == 2
    assert all(j.params.sec_count_range == (2, 6) for j in jobs)
    assert jobs[3].params.seed == derive_seed(1, 2, 2, 1)


def test_appendix_rows_show_optimal_dominance():
    rows = run_appendix_compare(appendix_jobs(replications=1))
    assert len(rows) == 39
    ok = [r for r in rows if r["status"] == "ok"]
    assert ok
    for row in ok:
        assert row["delta_eta_percent"] >= 0
        assert row["optimal_eta"] >= row["hydra_eta"]
        assert 2 <= row["n_sec"] <= 6
    assert csv_text(APPENDIX_HEADER, rows).count("\n") == 40


def test_appendix_row_reports_limit_exceeded():
    job = appendix_jobs(replications=1, limit=1)[0]
    assert appendix_row(job)["status"] == "limit_exceeded"


def test_schedulability_sweep_rows():
    result = run_schedulability_sweep(schedulability_jobs(2, replications=1))
    assert len(result["configs"]) == 39
    ok_points = {r["point"] for r in result["configs"] if r["status"] == "ok"}
    assert len(result["acceptance"]) == 2 * len(ok_points)
    for row in result["acceptance"]:
        assert row["generated"] == 1
        assert 0 <= row["acceptance_ratio"] <= 1


def test_acceptance_rows_aggregate_per_point_and_scheme():
    base = {"cores": 2, "point": 1, "utilization": Fraction(1, 20), "normalized_utilization": Fraction(1, 40),
            "status": "ok"}
    configs = [
        {**base, "hydra_schedulable": True, "single_schedulable": False,
         "hydra_mean_tightness": Fraction(1), "single_mean_tightness": None},
        {**base, "hydra_schedulable": True, "single_schedulable": True,
         "hydra_mean_tightness": Fraction(1, 2), "single_mean_tightness": Fraction(1, 4)},
        {**base, "status": "generation_failed"},
    ]
    hydra, single = acceptance_rows(configs)
    assert (hydra["scheme"], hydra["generated"], hydra["accepted"]) == ("hydra", 2, 2)
    assert hydra["mean_tightness"] == Fraction(3, 4)
    assert single["acceptance_ratio"] == Fraction(1, 2)
    assert single["mean_tightness"] == Fraction(1, 4)


def test_detection_jobs_seed_per_core_count():
    jobs = detection_jobs(replications=2, master_seed=3, cores_list=(2, 4), duration=1_000_000, attacks=5)
    assert [(j.params.cores, j.replication) for j in jobs] == [(2, 0), (2, 1), (4, 0), (4, 1)]
    assert jobs[0].params.total_rt_util == 1
    assert jobs[2].params.seed == derive_seed(3, 4, 0, 0)


def test_detection_run_shares_the_attack_plan():
    job = detection_jobs(replications=1, cores_list=(2,), duration=2_000_000, attacks=20)[0]
    result = detection_run(job)
    row = result["row"]
    if row["status"] in ("ok", "no_samples"):
        for scheme, prefix in (("hydra", "hydra"), ("single-core", "single")):
            detected = [s for s in result["samples"] if s["scheme"] == scheme]
            assert len(detected) + row[f"{prefix}_censored"] == 20
    assert detection_run(job) == result


def test_detection_cdf_outputs():
    jobs = detection_jobs(replications=2, cores_list=(2,), duration=2_000_000, attacks=20)
    result = run_detection_cdf(jobs, grid_points=5)
    assert len(result["configs"]) == 2
    for scheme in ("hydra", "single-core"):
        points = [r for r in result["cdf"] if r["scheme"] == scheme]
        if points:
            assert points[-1]["cdf"] == 1
            assert [p["cdf"] for p in points] == sorted(p["cdf"] for p in points)


def test_sweep_job_is_picklable_for_worker_processes():
    job = SweepJob(point=1, replication=0, params=GenParams(cores=2, total_rt_util=1, seed=0))
    assert pickle.loads(pickle.dumps(job)) == job


# ==================== 桌面规模验收 ====================

@pytest.mark.slow
def test_appendix_compare_at_desk_scale():
    rows = run_appendix_compare(appendix_jobs(replications=25), workers=4)
    ok = [r for r in rows if r["status"] == "ok"]
    assert all(r["delta_eta_percent"] >= 0 for r in ok)
    assert max(r["delta_eta_percent"] for r in ok) <= 30

    by_point = {}
    for row in ok:
        by_point.setdefault(row["utilization"], []).append(row["delta_eta_percent"])
    for utilization, values in by_point.items():
        if utilization <= 1:
            assert median(values) == 0


@pytest.mark.slow
def test_detection_improvement_trend():
    jobs = detection_jobs(replications=25, cores_list=DETECTION_CORES, duration=50_000_000, attacks=100)
    improvement = {r["cores"]: r["mean_improvement_percent"] for r in run_detection_cdf(jobs, 4)["improvement"]}
    assert all(value >= 0 for value in improvement.values())
    assert improvement[8] >= improvement[2]


@pytest.mark.slow
def test_acceptance_ratio_sanity():
    result = run_schedulability_sweep(schedulability_jobs(2, replications=25), workers=4)
    hydra = [r for r in result["acceptance"] if r["scheme"] == "hydra"]
    for previous, current in zip(hydra, hydra[1:]):
        assert current["acceptance_ratio"] <= previous["acceptance_ratio"] + Fraction(2, 100)

    single_ok = [r for r in result["configs"] if r["status"] == "ok" and r["single_schedulable"]]
    both = sum(1 for r in single_ok if r["hydra_schedulable"])
    assert both >= Fraction(95, 100) * len(single_ok)

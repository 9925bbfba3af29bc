import math

import pytest

from spindex.graphs import random_network
from spindex.simulate import (Calibration, SyntheticEngine, ThroughputReport,
                              WorkloadConfig, analytic_bound, calibrate_engine,
                              measure_max_throughput, simulate)


class TestAnalyticBound:
    def test_worked_example(self):
        # deterministic 1ms service, no update work, generous bound:
        # the period term dominates at 1/t_q except for the qos correction
        got = analytic_bound(0.001, 0.0, 0.0, 120.0, 1.0)
        assert abs(got - 999.5) / 999.5 < 1e-3

    def test_update_saturates_period(self):
        assert analytic_bound(0.001, 0.0, 120.0, 120.0, 1.0) == 0.0
        assert analytic_bound(0.001, 0.0, 200.0, 120.0, 1.0) == 0.0

    def test_qos_below_service(self):
        assert analytic_bound(2.0, 0.0, 0.0, 120.0, 1.0) == 0.0

    def test_variance_lowers_bound(self):
        lo_var = analytic_bound(0.01, 0.0, 0.0, 120.0, 0.05)
        hi_var = analytic_bound(0.01, 0.5, 0.0, 120.0, 0.05)
        assert hi_var < lo_var

    def test_mm1_response_identity(self):
        # M/M/1 at utilization 1/2: R = t_q / (1 - rho) = 2 t_q, so the rate
        # solving R = qos with qos = 2 t_q is exactly 0.5 / t_q
        t_q = 0.01
        rate = analytic_bound(t_q, t_q * t_q, 0.0, 1e9, 2 * t_q)
        assert abs(rate - 0.5 / t_q) < 1e-9

    def test_rejects_nonpositive_service(self):
        with pytest.raises(ValueError):
            analytic_bound(0.0, 0.0, 0.0, 120.0, 1.0)


class TestWorkloadConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            WorkloadConfig(interval=0)
        with pytest.raises(ValueError):
            WorkloadConfig(qos=0)
        with pytest.raises(ValueError):
            WorkloadConfig(horizon=0)
        with pytest.raises(ValueError):
            WorkloadConfig(clock="sundial")


def synthetic_run(rate, mean=0.01, horizon=50, interval=10.0, seed=3,
                  blocking=0.0, total=0.0):
    eng = SyntheticEngine(mean, update_blocking=blocking, update_total=total)
    cfg = WorkloadConfig(interval=interval, volume=1, qos=1e9, arrival=rate,
                         horizon=horizon, seed=seed, clock="virtual")
    net = random_network(10, 12, 1)
    return simulate(eng, net, cfg, eng.calibration())


class TestSimulate:
    def test_no_arrivals(self):
        trace = synthetic_run(0.0, horizon=5)
        assert trace.n_queries == 0
        assert len(trace.batches) == 5

    def test_batches_per_period(self):
        trace = synthetic_run(5.0, horizon=8)
        assert [b.period for b in trace.batches] == list(range(8))

    def test_deterministic(self):
        a = synthetic_run(20.0, seed=9)
        b = synthetic_run(20.0, seed=9)
        assert a.n_queries == b.n_queries
        assert [(q.arrival, q.start, q.completion) for q in a.queries] == \
            [(q.arrival, q.start, q.completion) for q in b.queries]

    def test_fifo_no_overlap(self):
        trace = synthetic_run(40.0, mean=0.02)
        last_completion = 0.0
        for q in trace.queries:
            assert q.start >= q.arrival
            assert q.start >= last_completion - 1e-12
            last_completion = q.completion

    def test_queries_wait_for_blocking_stage(self):
        trace = synthetic_run(30.0, blocking=0.5, total=0.5)
        for q in trace.queries:
            for b in trace.batches:
                if b.start <= q.start < b.blocking_until:
                    pytest.fail("query started inside a blocking window")

    def test_mm1_mean_response(self):
        # exponential service at utilization 0.5: R = 2 t_q
        mean = 0.01
        trace = synthetic_run(50.0, mean=mean, horizon=300, interval=10.0)
        assert trace.n_queries > 50_000
        assert abs(trace.R_q - 2 * mean) / (2 * mean) < 0.1

    def test_new_batch_supersedes_unpublished_stages(self):
        # repair takes 25s but a batch lands every 10s, so the second stage
        # never actually publishes; queries must stay on the first stage and
        # the stale publication must vanish from the batch records
        class TwoStage:
            stages = ["Q1", "Q2"]

            def sample_service(self, stage, calibration, rng):
                return calibration.service[stage]

        eng = TwoStage()
        cal = Calibration({"Q1": 0.001, "Q2": 0.001},
                          {"Q1": 0.0, "Q2": 25.0}, 0.0, 25.0)
        cfg = WorkloadConfig(interval=10.0, volume=1, qos=1e9, arrival=5.0,
                             horizon=5, seed=2, clock="virtual")
        net = random_network(10, 12, 1)
        trace = simulate(eng, net, cfg, cal)
        assert trace.n_queries > 0
        assert all(q.stage == "Q1" for q in trace.queries)
        assert all("Q2" not in b.publications for b in trace.batches[:-1])
        assert "Q2" in trace.batches[-1].publications

    def test_truncation_flag(self):
        eng = SyntheticEngine(0.001)
        cfg = WorkloadConfig(interval=10.0, volume=1, qos=1e9, arrival=100.0,
                             horizon=10, seed=1, clock="virtual",
                             max_queries=100)
        net = random_network(10, 12, 1)
        trace = simulate(eng, net, cfg, eng.calibration())
        assert trace.truncated
        assert trace.n_queries <= 100


class TestMeasureMaxThroughput:
    def test_matches_analytic_for_synthetic(self):
        mean = 0.002
        eng = SyntheticEngine(mean)
        cfg = WorkloadConfig(interval=10.0, volume=1, qos=0.01, arrival=1.0,
                             horizon=60, seed=5, clock="virtual")
        net = random_network(10, 12, 1)
        report = measure_max_throughput(eng, net, cfg, eng.calibration())
        assert report.rate > 0
        assert report.analytic > 0
        assert report.rate <= report.analytic * 1.15
        assert report.rate >= report.analytic * 0.5

    def test_overload_returns_zero(self):
        eng = SyntheticEngine(0.001, update_blocking=15.0, update_total=15.0)
        cfg = WorkloadConfig(interval=10.0, volume=1, qos=1.0, arrival=1.0,
                             horizon=10, seed=6, clock="virtual")
        net = random_network(10, 12, 1)
        report = measure_max_throughput(eng, net, cfg, eng.calibration())
        assert report.rate == 0.0
        assert report.overload

    def test_probe_log_present(self):
        eng = SyntheticEngine(0.01)
        cfg = WorkloadConfig(interval=10.0, volume=1, qos=0.05, arrival=1.0,
                             horizon=30, seed=7, clock="virtual")
        net = random_network(10, 12, 1)
        report = measure_max_throughput(eng, net, cfg, eng.calibration())
        assert report.probes
        rates = [p["rate"] for p in report.probes]
        assert rates[0] == 1.0


class TestRealEngineWallClock:
    def test_trace_is_causal_and_exact(self):
        from spindex.engines import make_engine
        from spindex.graphs import dijkstra_sssp
        net = random_network(120, 170, 8)
        eng = make_engine("mhl", net)
        cfg = WorkloadConfig(interval=0.05, volume=5, qos=10.0, arrival=400.0,
                             horizon=4, seed=9, clock="wall")
        trace = simulate(eng, net, cfg, collect_answers=True)
        assert trace.n_queries > 0
        # every query ran at a stage already published at its start time
        pubs = sorted((t, s) for b in trace.batches
                      for s, t in b.publications.items())
        for q in trace.queries:
            live = [s for t, s in pubs if t <= q.start]
            if live:
                assert q.stage == live[-1]

    def test_calibration_covers_stages(self):
        from spindex.engines import make_engine
        net = random_network(60, 85, 10)
        eng = make_engine("mhl", net)
        cfg = WorkloadConfig(interval=1.0, volume=5, qos=1.0, arrival=1.0,
                             horizon=2, seed=11, clock="wall")
        cal = calibrate_engine(eng, net, cfg, samples=30, batches=1)
        assert set(cal.service) == {"Q1", "Q2", "Q3"}
        assert all(v > 0 for v in cal.service.values())
        assert cal.total_update >= cal.blocking >= 0

import itertools
import math

import pytest

from cdsc.budget import bound_sparsity, bound_uniform, budget_ic
from cdsc.citest import TesterConfig
from cdsc.errors import InvalidParameter
from cdsc.harness import (
    CurvePoint,
    ErrorCurve,
    ExperimentSpec,
    budget_comparison,
    calibrate_c_prime,
    comparison_csv,
    crossing_point,
    error_rate_experiment,
    is_nonincreasing,
    run_trial,
    theoretical_curve,
    trial_seed,
    worker_cap,
)
from cdsc.model import or_gate_model


def test_oracle_smoke_has_no_errors():
    spec = ExperimentSpec(or_gate_model(3, 0.6), [10, 100], trials=5, source="oracle")
    curve = error_rate_experiment(spec)
    assert curve.error_rates == [0.0, 0.0]


def test_spec_validation():
    net = or_gate_model(3, 0.6)
    for kw in [dict(trials=0), dict(sample_sizes=[100, 10]), dict(sample_sizes=[0]),
               dict(algorithm="pc"), dict(algorithm="xx"), dict(source="x"), dict(sharing="x")]:
        args = {"model": net, "sample_sizes": [10], **kw}
        with pytest.raises(InvalidParameter):
            ExperimentSpec(**args)


def test_determinism_and_csv():
    spec = ExperimentSpec(or_gate_model(3, 0.6), [1000], trials=1, base_seed=7,
                          config=TesterConfig(epsilon=0.18))
    a, b = error_rate_experiment(spec), error_rate_experiment(spec)
    assert a.to_csv() == b.to_csv()
    assert a.to_csv().splitlines()[0] == "m,trials,failures,error_rate,ci_halfwidth,theoretical_alpha"


def test_trial_seeds_distinct():
    seeds = {trial_seed(3, mi, t) for mi in range(4) for t in range(1000)}
    assert len(seeds) == 4000


def test_trial_order_does_not_matter():
    spec = ExperimentSpec(or_gate_model(3, 0.6), [300, 3000], trials=6, base_seed=2,
                          config=TesterConfig(epsilon=0.18))
    jobs = [(mi, t) for mi in range(2) for t in range(6)]
    forward = {job: run_trial(spec, *job) for job in jobs}
    backward = {job: run_trial(spec, *job) for job in reversed(jobs)}
    assert forward == backward
    curve = error_rate_experiment(spec)
    assert [p.failures for p in curve.points] == [
        sum(forward[(mi, t)] for t in range(6)) for mi in range(2)
    ]


def test_parallel_matches_serial(monkeypatch):
    monkeypatch.delenv("CDSC_THREADS", raising=False)
    base = dict(model=or_gate_model(3, 0.6), sample_sizes=[500], trials=4, base_seed=1,
                config=TesterConfig(epsilon=0.18))
    serial = error_rate_experiment(ExperimentSpec(**base))
    parallel = error_rate_experiment(ExperimentSpec(**base, workers=2))
    assert serial.to_csv() == parallel.to_csv()


def test_worker_cap(monkeypatch):
    monkeypatch.setenv("CDSC_THREADS", "2")
    assert worker_cap(8) == 2
    monkeypatch.delenv("CDSC_THREADS")
    assert worker_cap(3) == 3
    assert worker_cap(0) == 1


def test_fresh_sharing_runs():
    spec = ExperimentSpec(or_gate_model(3, 0.6), [20_000], trials=3, sharing="fresh",
                          config=TesterConfig(epsilon=0.18), algorithm="pc", r=1)
    curve = error_rate_experiment(spec)
    assert 0 <= curve.points[0].failures <= 3


def test_theoretical_curve_round_trip():
    m05 = budget_ic(3, 2, 0.05, 0.1).m_expected
    th = theoretical_curve(3, 2, 0.1, 1.0, [m05, 2 * m05, 1.0])
    assert th[0] == pytest.approx(0.05, rel=1e-12)
    assert th[1] == pytest.approx(0.025, rel=1e-12)
    assert th[2] == 1.0


def test_theoretical_curve_pc_uses_sparsity_bound():
    m = bound_sparsity(6, 2, 0.05, 0.1, 1)
    assert theoretical_curve(6, 2, 0.1, 1.0, [m], "pc", 1)[0] == pytest.approx(0.05, rel=1e-12)
    with pytest.raises(InvalidParameter):
        theoretical_curve(6, 2, 0.1, 1.0, [m], "pc", None)


def _curve(rates, ms=(1e3, 1e4, 1e5, 1e6), trials=200):
    return ErrorCurve(tuple(CurvePoint(m, trials, round(r * trials)) for m, r in zip(ms, rates)))


def test_crossing_point_interpolates_in_log_m():
    c = _curve([0.8, 0.2, 0.0, 0.0])
    assert crossing_point(c, 0.5) == pytest.approx(10**3.5)
    assert crossing_point(_curve([0.3, 0.1, 0.0, 0.0]), 0.5) is None


def test_calibration_matches_crossing():
    c = _curve([0.8, 0.2, 0.0, 0.0])
    c_prime, m_cross, level = calibrate_c_prime(c, 3, 2, 0.18)
    assert level == 0.5
    assert theoretical_curve(3, 2, 0.18, c_prime, [m_cross])[0] == pytest.approx(0.5, rel=1e-12)


def test_calibration_auto_level_on_plateau():
    c = _curve([0.1, 0.0, 0.0, 0.0])
    c_prime, m_cross, level = calibrate_c_prime(c, 3, 2, 0.18, level=None)
    assert level == pytest.approx(0.1) and m_cross == 1e3
    assert theoretical_curve(3, 2, 0.18, c_prime, [1e3])[0] == pytest.approx(0.1, rel=1e-12)
    with pytest.raises(InvalidParameter):
        calibrate_c_prime(_curve([0, 0, 0, 0]), 3, 2, 0.18, level=None)


def test_budget_comparison_shape():
    rows = budget_comparison(range(3, 13), 2, 0.05, 0.1, 1)
    assert len(rows) == 10
    assert rows[0].m_ic == rows[0].m_pc
    for a, b in itertools.pairwise(rows):
        assert b.m_ic > a.m_ic and b.m_pc > a.m_pc and b.ratio >= a.ratio
    assert rows[-1].ratio > rows[1].ratio
    assert rows[0].m_ic == bound_uniform(3, 2, 0.05, 0.1)
    three = budget_comparison([6], 3, 0.05, 0.1, 1)[0]
    assert three.m_ic > budget_comparison([6], 2, 0.05, 0.1, 1)[0].m_ic
    assert comparison_csv(rows).splitlines()[0] == "N,m_ic,m_pc,ratio"
    with pytest.raises(InvalidParameter):
        budget_comparison([], 2, 0.05, 0.1, 1)


def test_is_nonincreasing():
    assert is_nonincreasing([0.5, 0.3, 0.31, 0.0], [0.03, 0.03, 0.03, 0.0])
    assert not is_nonincreasing([0.1, 0.5], [0.01, 0.01])


def test_curve_point_halfwidth():
    p = CurvePoint(100.0, 200, 50)
    assert p.error_rate == 0.25
    assert p.ci_halfwidth == pytest.approx(1.96 * math.sqrt(0.25 * 0.75 / 200))

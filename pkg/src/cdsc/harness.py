"""Monte-Carlo error-rate experiments and budget comparison tables."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

from ._seeding import mix_seed
from .budget import ExpertiseSet, budget_ic, budget_with_expertise, bound_sparsity, bound_uniform
from .citest import GAMMA, TesterConfig, poisson_count
from .discovery import ExactOracle, FiniteSample, recovery_success, run_ic, run_pc
from .errors import InvalidParameter, RecoveryFailed
from .io import write_csv
from .model import BayesNet, Dataset, joint_from_net, sample_dataset

CURVE_COLUMNS = ("m", "trials", "failures", "error_rate", "ci_halfwidth", "theoretical_alpha")
TABLE_COLUMNS = ("N", "m_ic", "m_pc", "ratio")

@dataclass(frozen=True)
class ExperimentSpec:
    model: BayesNet
    sample_sizes: Sequence[float]
    trials: int = 200
    algorithm: str = "ic"  # "ic" or "pc"
    r: int | None = None
    base_seed: int = 0
    config: TesterConfig = field(default_factory=TesterConfig)
    source: str = "tester"  # "tester" or "oracle"
    sharing: str = "shared"  # one Poissonized sample per trial, or a fresh draw per test
    workers: int = 1

    def __post_init__(self):
        sizes = [float(m) for m in self.sample_sizes]
        object.__setattr__(self, "sample_sizes", tuple(sizes))
        if self.trials < 1:
            raise InvalidParameter("trials must be >= 1")
        if not sizes or any(m <= 0 for m in sizes) or sizes != sorted(sizes):
            raise InvalidParameter("sample sizes must be positive and ascending")
        if self.algorithm not in ("ic", "pc"):
            raise InvalidParameter(f"unknown algorithm {self.algorithm!r}")
        if self.algorithm == "pc" and (self.r is None or self.r < 0):
            raise InvalidParameter("pc needs a nonnegative sparsity bound r")
        if self.source not in ("tester", "oracle"):
            raise InvalidParameter(f"unknown source {self.source!r}")
        if self.sharing not in ("shared", "fresh"):
            raise InvalidParameter(f"unknown sharing mode {self.sharing!r}")

@dataclass(frozen=True)
class CurvePoint:
    m: float
    trials: int
    failures: int
    theoretical_alpha: float | None = None

    @property
    def error_rate(self) -> float:
        return self.failures / self.trials

    @property
    def ci_halfwidth(self) -> float:
        """Normal-approximation 95% half-width of the binomial rate."""
        p = self.error_rate
        return 1.96 * math.sqrt(p * (1.0 - p) / self.trials)

    @property
    def sigma(self) -> float:
        p = self.error_rate
        return math.sqrt(p * (1.0 - p) / self.trials)

@dataclass(frozen=True)
class ErrorCurve:
    points: tuple[CurvePoint, ...]

    def to_csv(self) -> str:
        return write_csv(
            CURVE_COLUMNS,
            (
                (p.m, p.trials, p.failures, p.error_rate, p.ci_halfwidth, p.theoretical_alpha)
                for p in self.points
            ),
        )

    def to_records(self) -> list[dict]:
        return [dict(zip(CURVE_COLUMNS, (p.m, p.trials, p.failures, p.error_rate, p.ci_halfwidth,
                                          p.theoretical_alpha))) for p in self.points]

    @property
    def error_rates(self) -> list[float]:
        return [p.error_rate for p in self.points]

def trial_seed(base_seed: int, m_index: int, trial: int) -> int:
    return mix_seed(base_seed, m_index, trial)

def run_trial(spec: ExperimentSpec, m_index: int, trial: int) -> bool:
    """One discovery run; True means the true pattern was NOT recovered."""
    net = spec.model
    m = spec.sample_sizes[m_index]
    seed = trial_seed(spec.base_seed, m_index, trial)
    if spec.source == "oracle":
        ci = ExactOracle(joint_from_net(net))
    else:
        config = replace(spec.config, rng_seed=seed)
        if spec.sharing == "shared":
            k = poisson_count(m, mix_seed(seed, 0))
            rows = sample_dataset(net, k, mix_seed(seed, 1)).rows
            ci = FiniteSample(Dataset(net.variables, rows, poisson_mean=m), config, m)
        else:
            ci = FiniteSample(net, config, m)
    try:
        if spec.algorithm == "ic":
            found, _ = run_ic(net.n, ci)
        else:
            found, _ = run_pc(net.n, ci, spec.r)
    except RecoveryFailed:
        return True
    return not recovery_success(found, net.dag)

def _run_chunk(args):
    spec, jobs = args
    return [run_trial(spec, mi, t) for mi, t in jobs]

def worker_cap(requested: int) -> int:
    env = os.environ.get("CDSC_THREADS")
    cap = int(env) if env and env.isdigit() and int(env) > 0 else requested
    return max(1, min(requested, cap))

def error_rate_experiment(spec: ExperimentSpec) -> ErrorCurve:
    jobs = [(mi, t) for mi in range(len(spec.sample_sizes)) for t in range(spec.trials)]
    workers = worker_cap(spec.workers)
    if workers == 1:
        outcomes = _run_chunk((spec, jobs))
    else:
        chunks = [jobs[w::workers] for w in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_run_chunk, [(spec, c) for c in chunks]))
        outcomes = [None] * len(jobs)
        for w, part in enumerate(parts):
            outcomes[w::workers] = part
    failures = [0] * len(spec.sample_sizes)
    for (mi, _), failed in zip(jobs, outcomes):
        failures[mi] += int(failed)
    theory = _theory_for(spec)
    return ErrorCurve(
        tuple(
            CurvePoint(m, spec.trials, f, th)
            for m, f, th in zip(spec.sample_sizes, failures, theory)
        )
    )

def _theory_for(spec: ExperimentSpec) -> list[float | None]:
    cards = spec.model.dag.cards
    if spec.source == "oracle":
        return [0.0] * len(spec.sample_sizes)
    mode = spec.algorithm
    if len(set(cards)) == 1:
        return theoretical_curve(
            spec.model.n, cards[0], spec.config.epsilon, spec.config.c_prime,
            spec.sample_sizes, mode, spec.r, spec.config.gamma,
        )
    s = ExpertiseSet(max_cond=spec.r) if mode == "pc" else ExpertiseSet()
    ref = budget_with_expertise(spec.model.n, list(cards), 0.5, spec.config.epsilon, s, spec.config)
    return [min(1.0, 0.5 * ref.m_expected / m) for m in spec.sample_sizes]

def theory_samples_at(
    n: int, ell: int, epsilon: float, c_prime: float, alpha: float,
    mode: str = "ic", r: int | None = None, gamma: float = GAMMA,
) -> float:
    """Expected samples the guarantee asks for at confidence 1 - alpha."""
    config = TesterConfig(epsilon=epsilon, c_prime=c_prime, gamma=gamma)
    if mode == "ic":
        return budget_ic(n, ell, alpha, epsilon, config).m_expected
    if mode == "pc":
        if r is None:
            raise InvalidParameter("pc mode needs r")
        return bound_sparsity(n, ell, alpha, epsilon, min(r, n - 2), config)
    raise InvalidParameter(f"unknown mode {mode!r}")

def theoretical_curve(
    n: int, ell: int, epsilon: float, c_prime: float, m_grid: Sequence[float],
    mode: str = "ic", r: int | None = None, gamma: float = GAMMA,
) -> list[float]:
    """Guaranteed failure probability at each m; budgets scale as 1/alpha, so alpha = k/m."""
    ref = theory_samples_at(n, ell, epsilon, c_prime, 0.5, mode, r, gamma) * 0.5
    return [min(1.0, ref / float(m)) for m in m_grid]

def crossing_point(curve: ErrorCurve, level: float = 0.5) -> float | None:
    """m at which the empirical error rate first drops through ``level``,
    interpolated linearly in log m. None when the curve never crosses."""
    pts = curve.points
    for a, b in zip(pts, pts[1:]):
        if a.error_rate > level >= b.error_rate:
            frac = (a.error_rate - level) / (a.error_rate - b.error_rate)
            return math.exp(math.log(a.m) + frac * (math.log(b.m) - math.log(a.m)))
    return None

def calibrate_c_prime(
    curve: ErrorCurve, n: int, ell: int, epsilon: float,
    mode: str = "ic", r: int | None = None, gamma: float = GAMMA, level: float | None = 0.5,
) -> tuple[float, float, float]:
    """Pick C' so the guarantee at alpha=level needs exactly the m where the
    empirical curve reaches ``level``. Returns (c_prime, m_cross, level).

    ``level=None`` uses min(0.5, highest empirical rate): finite-sample error
    rates can plateau below 0.5 at small m, in which case the calibration
    point is the grid point holding the highest rate.
    """
    if level is None:
        top = max(curve.error_rates)
        if top <= 0:
            raise InvalidParameter("empirical curve has no failures to calibrate against")
        level = min(0.5, top)
        m_cross = crossing_point(curve, level)
        if m_cross is None:
            m_cross = next(p.m for p in curve.points if p.error_rate == top)
    else:
        m_cross = crossing_point(curve, level)
    if m_cross is None:
        raise InvalidParameter(f"empirical curve never crosses error rate {level}")
    unit = theory_samples_at(n, ell, epsilon, 1.0, level, mode, r, gamma)
    return m_cross / unit, m_cross, level

@dataclass(frozen=True)
class ComparisonRow:
    N: int
    m_ic: float
    m_pc: float

    @property
    def ratio(self) -> float:
        return self.m_ic / self.m_pc

def budget_comparison(
    n_range: Sequence[int], ell: int, alpha: float, epsilon: float, r: int, c_prime: float = 1.0,
    gamma: float = GAMMA,
) -> list[ComparisonRow]:
    if not n_range:
        raise InvalidParameter("empty range of node counts")
    config = TesterConfig(epsilon=epsilon, c_prime=c_prime, gamma=gamma)
    rows = []
    for n in n_range:
        m_ic = bound_uniform(n, ell, alpha, epsilon, config)
        m_pc = bound_sparsity(n, ell, alpha, epsilon, min(r, n - 2), config)
        rows.append(ComparisonRow(int(n), m_ic, m_pc))
    return rows

def comparison_csv(rows: Sequence[ComparisonRow]) -> str:
    return write_csv(TABLE_COLUMNS, ((r.N, r.m_ic, r.m_pc, r.ratio) for r in rows))

def is_nonincreasing(rates: Sequence[float], sigmas: Sequence[float], k: float = 2.0) -> bool:
    """Each later rate may exceed an earlier one by at most k combined sigmas."""
    for a in range(len(rates)):
        for b in range(a + 1, len(rates)):
            slack = k * math.sqrt(sigmas[a] ** 2 + sigmas[b] ** 2)
            if rates[b] > rates[a] + slack:
                return False
    return True

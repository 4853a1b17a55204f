"""Sample-complexity planner.

Every CI test ``t = ({i, j}, B)`` needs ``m(M_t, a_t) = g_t / a_t`` expected
samples to reach confidence ``1 - a_t``, where ``M_t`` is the support size of
the conditioning set. Splitting a total failure budget ``alpha`` across the
family so that every test needs the same ``m`` gives ``m = sum_t g_t / alpha``.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .citest import GAMMA, TesterConfig, epsilon_prime
from .errors import EmptyFamily, InvalidParameter

# families larger than this are only planned through the grouped closed form
MAX_ENUMERATED_TESTS = 5_000_000


@dataclass(frozen=True, order=True)
class TestIndex:
    pair: tuple[int, int]
    cond: tuple[int, ...] = ()

    __test__ = False  # not a pytest class

    def __post_init__(self):
        i, j = (int(x) for x in self.pair)
        if i == j:
            raise InvalidParameter("a test needs two distinct variables")
        cond = tuple(sorted(set(int(x) for x in self.cond)))
        if i in cond or j in cond:
            raise InvalidParameter("conditioning set must exclude the tested pair")
        object.__setattr__(self, "pair", (min(i, j), max(i, j)))
        object.__setattr__(self, "cond", cond)


@dataclass(frozen=True)
class ExpertiseSet:
    """Tests answered without data.

    Membership is the union of an explicit list, every test whose conditioning
    set is larger than ``max_cond`` (a sparsity prior), and every test on a pair
    listed in ``known_pairs`` (known causal edges).
    """

    explicit: frozenset[TestIndex] = frozenset()
    max_cond: int | None = None
    known_pairs: frozenset[tuple[int, int]] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "explicit", frozenset(self.explicit))
        object.__setattr__(
            self, "known_pairs", frozenset((min(a, b), max(a, b)) for a, b in self.known_pairs)
        )
        if self.max_cond is not None and self.max_cond < 0:
            raise InvalidParameter("sparsity bound must be nonnegative")

    def __contains__(self, t: TestIndex) -> bool:
        if self.max_cond is not None and len(t.cond) > self.max_cond:
            return True
        return t.pair in self.known_pairs or t in self.explicit

    @property
    def is_empty(self) -> bool:
        return not self.explicit and self.max_cond is None and not self.known_pairs


NO_EXPERTISE = ExpertiseSet()


@dataclass(frozen=True)
class TestGroup:
    """``count`` tests sharing support size ``M`` and pair scale ``eps_prime``."""

    M: int
    eps_prime: float
    count: int

    __test__ = False


class TestFamily:
    """All CI tests the skeleton search may run over variables with ``cards``."""

    __test__ = False

    def __init__(self, cards: Sequence[int]):
        self.cards = tuple(int(c) for c in cards)
        if len(self.cards) < 2:
            raise InvalidParameter("a test family needs at least two variables")
        if min(self.cards) < 2:
            raise InvalidParameter("cardinalities must be at least 2")

    @property
    def n(self) -> int:
        return len(self.cards)

    @property
    def uniform(self) -> bool:
        return len(set(self.cards)) == 1

    def size(self) -> int:
        return math.comb(self.n, 2) * 2 ** (self.n - 2)

    def tests(self) -> Iterator[TestIndex]:
        nodes = range(self.n)
        for i, j in itertools.combinations(nodes, 2):
            rest = [k for k in nodes if k not in (i, j)]
            for size in range(len(rest) + 1):
                for cond in itertools.combinations(rest, size):
                    yield TestIndex((i, j), cond)

    def support(self, t: TestIndex) -> int:
        return math.prod(self.cards[k] for k in t.cond)

    def groups(self, epsilon: float, expertise: ExpertiseSet = NO_EXPERTISE) -> list[TestGroup]:
        """Multiset of (M, eps') over tests outside ``expertise``."""
        if self.uniform and not expertise.explicit:
            return self._grouped(epsilon, expertise)
        if self.size() > MAX_ENUMERATED_TESTS:
            raise InvalidParameter(
                f"family of {self.size()} tests is too large to enumerate; "
                "use uniform cardinalities with intensional expertise"
            )
        tally: Counter = Counter()
        for t in self.tests():
            if t in expertise:
                continue
            i, j = t.pair
            tally[(self.support(t), epsilon_prime(epsilon, self.cards[i], self.cards[j]))] += 1
        return [TestGroup(M, e, c) for (M, e), c in sorted(tally.items())]

    def _grouped(self, epsilon: float, expertise: ExpertiseSet) -> list[TestGroup]:
        n, ell = self.n, self.cards[0]
        known = {p for p in expertise.known_pairs if 0 <= p[0] < p[1] < n}
        pairs = math.comb(n, 2) - len(known)
        kmax = n - 2 if expertise.max_cond is None else min(expertise.max_cond, n - 2)
        eps = epsilon_prime(epsilon, ell, ell)
        if pairs <= 0:
            return []
        return [TestGroup(ell**k, eps, pairs * math.comb(n - 2, k)) for k in range(kmax + 1)]


def _base(c_prime: float, gamma: float, eps_prime: float) -> float:
    return 16.0 * c_prime / (gamma * eps_prime**2)


def regime(M: float, eps_prime: float) -> int:
    """1, 2 or 3 according to where M falls against R1 = eps'^(-8/3), R2 = eps'^(-8)."""
    r1, r2 = eps_prime ** (-8 / 3), eps_prime ** (-8)
    if M <= math.floor(r1):
        return 1
    if M <= math.floor(r2):
        return 2
    return 3


def regime_weight(M: float, eps_prime: float) -> float:
    """Relative cost of a test with support M against a single-bin test."""
    reg = regime(M, eps_prime)
    if reg == 1:
        return 1.0
    if reg == 2:
        return eps_prime * M ** (3 / 8)
    return eps_prime ** (6 / 7) * M ** (5 / 14)


def m_single(
    M: float, alpha: float, eps_prime: float, c_prime: float = 1.0, gamma: float = GAMMA
) -> float:
    """Expected samples for one test with support size M at confidence 1 - alpha."""
    if M < 1:
        raise InvalidParameter(f"support size must be >= 1, got {M}")
    if not 0 < alpha < 1:
        raise InvalidParameter(f"alpha must lie in (0, 1), got {alpha}")
    if not 0 < eps_prime < 1:
        raise InvalidParameter(f"eps_prime must lie in (0, 1), got {eps_prime}")
    base = 16.0 * c_prime / (alpha * gamma)
    if M <= eps_prime ** (-8 / 3):
        return base / eps_prime**2
    if M <= eps_prime ** (-8):
        return base * M ** (3 / 8) / eps_prime
    return base * M ** (5 / 14) / eps_prime ** (8 / 7)


@dataclass(frozen=True)
class AlphaGroup:
    M: int
    eps_prime: float
    count: int
    regime: int
    alpha_each: float


@dataclass
class BudgetReport:
    alpha: float
    alpha0_star: float
    m_expected: float
    log10_m_expected: float
    regime_counts: dict[str, int]
    groups: list[AlphaGroup]
    epsilon: float
    eps_prime_ref: float
    c_prime: float
    gamma: float
    value_of_expertise: float | None = None
    m_bound: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def n_tests(self) -> int:
        return sum(g.count for g in self.groups)

    def alpha_total(self) -> float:
        return math.fsum(g.count * g.alpha_each for g in self.groups)

    def m_per_group(self) -> list[float]:
        return [
            m_single(g.M, g.alpha_each, g.eps_prime, self.c_prime, self.gamma)
            for g in self.groups
            if 0 < g.alpha_each < 1
        ]

    def to_dict(self) -> dict:
        out = {
            "alpha": self.alpha,
            "alpha0_star": self.alpha0_star,
            "m_expected": self.m_expected,
            "log10_m_expected": self.log10_m_expected,
            "regime_counts": dict(self.regime_counts),
            "value_of_expertise": self.value_of_expertise,
            "m_bound": self.m_bound,
            "n_tests": self.n_tests,
            "epsilon": self.epsilon,
            "eps_prime": self.eps_prime_ref,
            "c_prime": self.c_prime,
            "gamma": self.gamma,
        }
        out.update(self.extra)
        return out


def _log_sum(logs: Iterable[float]) -> float:
    logs = list(logs)
    top = max(logs)
    return top + math.log(math.fsum(math.exp(x - top) for x in logs))


def _exp_or_inf(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def allocate_alphas(
    groups: Sequence[TestGroup],
    alpha: float,
    epsilon: float,
    c_prime: float = 1.0,
    gamma: float = GAMMA,
) -> BudgetReport:
    """Split ``alpha`` so every remaining test needs the same expected samples.

    Since ``m(M, a) = g(M) / a`` exactly, equalizing at level ``m`` forces
    ``a_t = g_t / m`` and the budget constraint gives ``m = sum_t g_t / alpha``.
    Sums run in log space so huge families do not overflow.
    """
    if not 0 < alpha < 1:
        raise InvalidParameter(f"alpha must lie in (0, 1), got {alpha}")
    groups = [g for g in groups if g.count > 0]
    if not groups:
        raise EmptyFamily("no tests remain to be funded")
    eps_ref = max(g.eps_prime for g in groups)
    base_ref = _base(c_prime, gamma, eps_ref)
    log_g = [
        math.log(_base(c_prime, gamma, g.eps_prime)) + math.log(regime_weight(g.M, g.eps_prime))
        for g in groups
    ]
    log_total = _log_sum(math.log(g.count) + lg for g, lg in zip(groups, log_g))
    log_m = log_total - math.log(alpha)
    alpha0 = _exp_or_inf(math.log(base_ref) - log_m)
    counts = {"r1": 0, "r2": 0, "r3": 0}
    out_groups = []
    for g, lg in zip(groups, log_g):
        reg = regime(g.M, g.eps_prime)
        counts[f"r{reg}"] += g.count
        out_groups.append(AlphaGroup(g.M, g.eps_prime, g.count, reg, _exp_or_inf(lg - log_m)))
    return BudgetReport(
        alpha=alpha,
        alpha0_star=alpha0,
        m_expected=_exp_or_inf(log_m),
        log10_m_expected=log_m / math.log(10),
        regime_counts=counts,
        groups=out_groups,
        epsilon=epsilon,
        eps_prime_ref=eps_ref,
        c_prime=c_prime,
        gamma=gamma,
    )


def _cards(n: int, cardinalities) -> list[int]:
    if n < 2:
        raise InvalidParameter(f"need at least two variables, got {n}")
    if isinstance(cardinalities, int):
        return [cardinalities] * n
    cards = [int(c) for c in cardinalities]
    if len(cards) != n:
        raise InvalidParameter(f"expected {n} cardinalities, got {len(cards)}")
    return cards


def _constants(config: TesterConfig | None) -> tuple[float, float]:
    config = config or TesterConfig()
    return config.c_prime, config.gamma


def budget_ic(
    n: int, cardinalities, alpha: float, epsilon: float, config: TesterConfig | None = None
) -> BudgetReport:
    c_prime, gamma = _constants(config)
    fam = TestFamily(_cards(n, cardinalities))
    return allocate_alphas(fam.groups(epsilon), alpha, epsilon, c_prime, gamma)


def budget_with_expertise(
    n: int,
    cardinalities,
    alpha: float,
    epsilon: float,
    s: ExpertiseSet,
    config: TesterConfig | None = None,
) -> BudgetReport:
    """Plan over the tests not covered by ``s``; records the samples saved."""
    c_prime, gamma = _constants(config)
    fam = TestFamily(_cards(n, cardinalities))
    full = allocate_alphas(fam.groups(epsilon), alpha, epsilon, c_prime, gamma)
    report = allocate_alphas(fam.groups(epsilon, s), alpha, epsilon, c_prime, gamma)
    report.value_of_expertise = full.m_expected - report.m_expected
    return report


def _bound_prefix(n: int, ell: int, alpha: float, epsilon: float, config) -> float:
    if n < 2 or ell < 2:
        raise InvalidParameter("need n >= 2 and l >= 2")
    if not 0 < alpha < 1:
        raise InvalidParameter(f"alpha must lie in (0, 1), got {alpha}")
    c_prime, gamma = _constants(config)
    return 16.0 * c_prime / (alpha * gamma * epsilon_prime(epsilon, ell, ell) ** 2)


def _scaled(prefix: float, pairs: int, log_tail: float) -> float:
    if pairs <= 0:
        return 0.0
    return _exp_or_inf(math.log(prefix) + math.log(pairs) + log_tail)


def bound_uniform(n: int, ell: int, alpha: float, epsilon: float, config=None) -> float:
    """Closed-form upper bound for equal cardinalities ``ell``."""
    prefix = _bound_prefix(n, ell, alpha, epsilon, config)
    return _scaled(prefix, math.comb(n, 2), (n - 2) * math.log1p(ell ** (3 / 8)))


def bound_sparsity(n: int, ell: int, alpha: float, epsilon: float, r: int, config=None) -> float:
    """Bound when separating sets are known to hold at most ``r`` variables."""
    if not 0 <= r <= n - 2:
        raise InvalidParameter(f"sparsity bound must lie in [0, {n - 2}], got {r}")
    if r == n - 2:
        # the full sum collapses by the binomial theorem
        return bound_uniform(n, ell, alpha, epsilon, config)
    prefix = _bound_prefix(n, ell, alpha, epsilon, config)
    x = ell ** (3 / 8)
    log_tail = _log_sum(math.log(math.comb(n - 2, k)) + k * math.log(x) for k in range(r + 1))
    return _scaled(prefix, math.comb(n, 2), log_tail)


def bound_known_edges(
    n: int, ell: int, alpha: float, epsilon: float, d_count: int, config=None
) -> float:
    """Bound when ``d_count`` causal edges are known in advance."""
    pairs = math.comb(n, 2)
    if not 0 <= d_count <= pairs:
        raise InvalidParameter(f"known edge count must lie in [0, {pairs}], got {d_count}")
    prefix = _bound_prefix(n, ell, alpha, epsilon, config)
    return _scaled(prefix, pairs - d_count, (n - 2) * math.log1p(ell ** (3 / 8)))

"""IC / PC structure search over a pluggable CI source."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from ._seeding import mix_seed
from .budget import ExpertiseSet, TestIndex
from .citest import TesterConfig, ci_test
from .errors import InvalidParameter, OrientationConflict, RecoveryFailed
from .model import Dag, JointTable, exact_ci
from .patterns import (
    Pattern,
    find_v_structures,
    meek_close,
    orient_v_structures,
    pattern_of_dag,
    patterns_equal,
)


@dataclass(frozen=True)
class TraceEntry:
    pair: tuple[int, int]
    cond: tuple[int, ...]
    source: str  # "oracle" or "tester"
    independent: bool
    A: float | None = None
    tau: float | None = None
    K: int = 0

    def to_json(self) -> dict:
        """Record with 1-based node labels."""
        return {
            "pair": [self.pair[0] + 1, self.pair[1] + 1],
            "cond": [c + 1 for c in self.cond],
            "source": self.source,
            "independent": self.independent,
            "A": self.A,
            "tau": self.tau,
            "K": self.K,
        }

    @classmethod
    def from_json(cls, rec: dict) -> "TraceEntry":
        return cls(
            pair=(rec["pair"][0] - 1, rec["pair"][1] - 1),
            cond=tuple(c - 1 for c in rec["cond"]),
            source=rec["source"],
            independent=bool(rec["independent"]),
            A=rec.get("A"),
            tau=rec.get("tau"),
            K=int(rec.get("K", 0)),
        )


class ExactOracle:
    def __init__(self, joint: JointTable):
        self.joint = joint

    def query(self, i: int, j: int, cond: tuple[int, ...]) -> TraceEntry:
        return TraceEntry((i, j), cond, "oracle", exact_ci(self.joint, i, j, cond))


class FiniteSample:
    """Tester-backed source; each test's randomness is keyed on the test itself,
    so answers do not depend on scheduling or on which other tests ran."""

    def __init__(self, data, config: TesterConfig, m: float | None = None):
        self.data = data
        self.config = config
        self.m = m

    def query(self, i: int, j: int, cond: tuple[int, ...]) -> TraceEntry:
        seed = mix_seed(self.config.rng_seed, i, j, len(cond), *cond)
        d = ci_test(self.data, i, j, cond, self.config, self.m, seed=seed)
        return TraceEntry((i, j), cond, "tester", d.independent, d.statistic, d.threshold, d.samples_drawn)


class Hybrid:
    """Partial CI oracle on ``expertise``; ``fallback`` answers everything else.

    ``answers`` is either a joint table (answers computed exactly) or a mapping
    from ``TestIndex`` to the known boolean outcome; covered tests missing from
    the mapping are answered from ``oracle`` when one is given.
    """

    def __init__(
        self,
        expertise: ExpertiseSet,
        answers: JointTable | Mapping[TestIndex, bool],
        fallback,
        oracle: JointTable | None = None,
    ):
        self.expertise = expertise
        self.answers = answers
        self.fallback = fallback
        self.oracle = oracle

    def query(self, i: int, j: int, cond: tuple[int, ...]) -> TraceEntry:
        t = TestIndex((i, j), cond)
        if t not in self.expertise:
            return self.fallback.query(i, j, cond)
        if isinstance(self.answers, JointTable):
            ans = exact_ci(self.answers, i, j, cond)
        elif t in self.answers:
            ans = bool(self.answers[t])
        elif self.oracle is not None:
            ans = exact_ci(self.oracle, i, j, cond)
        else:
            raise InvalidParameter(f"expertise covers {t} but supplies no answer for it")
        return TraceEntry((i, j), cond, "oracle", ans)


def _conditioning_sets(n: int, i: int, j: int, max_cond: int | None):
    rest = [k for k in range(n) if k not in (i, j)]
    top = len(rest) if max_cond is None else min(max_cond, len(rest))
    for size in range(top + 1):
        yield from itertools.combinations(rest, size)


def skeleton_step(n: int, ci, max_cond: int | None = None):
    """Return (undirected skeleton, separating sets, trace)."""
    if n < 2:
        raise InvalidParameter("discovery needs at least two nodes")
    if max_cond is not None and max_cond < 0:
        raise InvalidParameter("conditioning-set cap must be nonnegative")
    edges, sep, trace = set(), {}, []
    for i, j in itertools.combinations(range(n), 2):
        for cond in _conditioning_sets(n, i, j, max_cond):
            entry = ci.query(i, j, cond)
            trace.append(entry)
            if entry.independent:
                sep[frozenset((i, j))] = cond
                break
        else:
            edges.add((i, j))
    return Pattern(n, frozenset(), frozenset(edges)), sep, trace


def _orient(skeleton: Pattern, sep, background: Iterable[tuple[int, int]] = ()) -> Pattern:
    p = orient_v_structures(skeleton, find_v_structures(skeleton, sep))
    directed, und = set(p.directed), set(p.undirected)
    for a, b in background:
        key = (min(a, b), max(a, b))
        if (b, a) in directed:
            raise OrientationConflict((a, b), f"known direction {(a, b)} contradicts a v-structure")
        if key in und:
            und.discard(key)
            directed.add((a, b))
    return meek_close(Pattern(p.n, frozenset(directed), frozenset(und)))


def _run(n: int, ci, max_cond, background):
    skeleton, sep, trace = skeleton_step(n, ci, max_cond)
    try:
        return _orient(skeleton, sep, background), trace
    except OrientationConflict as exc:
        raise RecoveryFailed(f"inconsistent CI answers: {exc}", trace) from exc


def run_ic(n: int, ci, background: Iterable[tuple[int, int]] = ()):
    """Full IC search: skeleton, v-structures, Meek closure. Returns (pattern, trace)."""
    return _run(n, ci, None, background)


def run_pc(n: int, ci, r: int, background: Iterable[tuple[int, int]] = ()):
    """IC with separating sets restricted to at most ``r`` variables."""
    if r < 0:
        raise InvalidParameter("sparsity bound must be nonnegative")
    return _run(n, ci, r, background)


def replay_trace(n: int, trace: Sequence[TraceEntry]) -> Pattern:
    """Rebuild the pattern that a trace implies, without querying anything."""
    found = {}
    for e in trace:
        if e.independent:
            found.setdefault(frozenset(e.pair), e.cond)
    edges = {(i, j) for i, j in itertools.combinations(range(n), 2) if frozenset((i, j)) not in found}
    return _orient(Pattern(n, frozenset(), frozenset(edges)), found)


def recovery_success(found: Pattern, truth: Dag) -> bool:
    return patterns_equal(found, pattern_of_dag(truth))

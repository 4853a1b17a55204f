"""Discrete causal models.

Joint tables are dense numpy arrays with one axis per variable, so the flat
view is mixed-radix lexicographic with the last variable varying fastest.
CPT rows follow the same convention over the node's parents sorted by index.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidParameter, StateSpaceTooLarge

CI_TOL = 1e-10
PROB_TOL = 1e-12
DEFAULT_STATE_CAP = 2**24


@dataclass(frozen=True)
class Variable:
    name: str
    card: int

    def __post_init__(self):
        if int(self.card) < 2:
            raise InvalidParameter(f"variable {self.name!r} needs cardinality >= 2, got {self.card}")


@dataclass(frozen=True)
class Dag:
    nodes: tuple[Variable, ...]
    edges: frozenset[tuple[int, int]] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", frozenset((int(a), int(b)) for a, b in self.edges))
        names = [v.name for v in self.nodes]
        if len(set(names)) != len(names):
            raise InvalidParameter("variable names must be unique")
        n = len(self.nodes)
        for a, b in self.edges:
            if not (0 <= a < n and 0 <= b < n):
                raise InvalidParameter(f"edge {(a, b)} references a missing node")
            if a == b:
                raise InvalidParameter(f"self-loop on node {a}")
        self.topological_order  # raises on cycles

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def cards(self) -> tuple[int, ...]:
        return tuple(v.card for v in self.nodes)

    def parents(self, i: int) -> tuple[int, ...]:
        return tuple(sorted(a for a, b in self.edges if b == i))

    def children(self, i: int) -> tuple[int, ...]:
        return tuple(sorted(b for a, b in self.edges if a == i))

    @cached_property
    def topological_order(self) -> tuple[int, ...]:
        indeg = [0] * self.n
        for _, b in self.edges:
            indeg[b] += 1
        ready = [i for i in range(self.n) if indeg[i] == 0]
        order = []
        while ready:
            ready.sort()
            i = ready.pop(0)
            order.append(i)
            for c in self.children(i):
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if len(order) != self.n:
            raise InvalidParameter("graph contains a directed cycle")
        return tuple(order)

    def skeleton(self) -> frozenset[tuple[int, int]]:
        return frozenset((min(a, b), max(a, b)) for a, b in self.edges)


@dataclass(frozen=True)
class BayesNet:
    dag: Dag
    cpts: tuple[np.ndarray, ...]

    def __post_init__(self):
        cpts = tuple(np.asarray(c, dtype=float) for c in self.cpts)
        object.__setattr__(self, "cpts", cpts)
        if len(cpts) != self.dag.n:
            raise InvalidParameter(f"expected {self.dag.n} CPTs, got {len(cpts)}")
        for i, cpt in enumerate(cpts):
            rows = int(np.prod([self.dag.nodes[p].card for p in self.dag.parents(i)], dtype=np.int64))
            shape = (rows, self.dag.nodes[i].card)
            if cpt.shape != shape:
                raise InvalidParameter(f"CPT of node {i} has shape {cpt.shape}, expected {shape}")
            if np.any(cpt < 0) or np.any(np.abs(cpt.sum(axis=1) - 1.0) > PROB_TOL):
                raise InvalidParameter(f"CPT of node {i} has a row that is not a distribution")

    @property
    def n(self) -> int:
        return self.dag.n

    @property
    def variables(self) -> tuple[Variable, ...]:
        return self.dag.nodes


@dataclass(frozen=True)
class JointTable:
    variables: tuple[Variable, ...]
    probs: np.ndarray  # shape = cards

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        probs = np.asarray(self.probs, dtype=float).reshape([v.card for v in self.variables])
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > PROB_TOL:
            raise InvalidParameter("joint table must be nonnegative with unit mass")
        object.__setattr__(self, "probs", probs)

    @property
    def flat(self) -> np.ndarray:
        return self.probs.reshape(-1)

    @property
    def n(self) -> int:
        return len(self.variables)


@dataclass(frozen=True)
class Dataset:
    """Integer-coded rows. ``poisson_mean`` marks a sample whose size was itself
    drawn as Poisson(mean); testers then use every row instead of redrawing K."""

    variables: tuple[Variable, ...]
    rows: np.ndarray
    poisson_mean: float | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        rows = np.asarray(self.rows, dtype=np.int64).reshape(-1, len(self.variables))
        cards = np.array([v.card for v in self.variables], dtype=np.int64)
        if rows.size and (rows.min() < 0 or np.any(rows.max(axis=0) >= cards)):
            raise InvalidParameter("dataset contains an out-of-range value code")
        object.__setattr__(self, "rows", rows)

    def __len__(self) -> int:
        return self.rows.shape[0]


def _check_state_space(cards: Sequence[int], cap: int) -> None:
    size = 1
    for c in cards:
        size *= int(c)
    if size > cap:
        raise StateSpaceTooLarge(f"joint state space has {size} states (cap {cap})")


def joint_from_net(net: BayesNet, cap: int = DEFAULT_STATE_CAP) -> JointTable:
    cards = net.dag.cards
    _check_state_space(cards, cap)
    probs = np.ones(cards)
    for i in range(net.n):
        pa = net.dag.parents(i)
        axes = list(pa) + [i]
        factor = net.cpts[i].reshape([cards[a] for a in axes])
        order = np.argsort(axes)
        factor = factor.transpose(order)
        shape = [1] * net.n
        for a in axes:
            shape[a] = cards[a]
        probs = probs * factor.reshape(shape)
    return JointTable(net.variables, probs)


def or_gate_model(n: int, p0: float) -> BayesNet:
    """X_1..X_{n-1} independent Bernoulli roots with P(0)=p0; X_n is their OR."""
    if n < 2:
        raise InvalidParameter(f"OR-gate model needs n >= 2, got {n}")
    if not 0.0 < p0 < 1.0:
        raise InvalidParameter(f"p0 must lie in (0, 1), got {p0}")
    nodes = tuple(Variable(f"X{k + 1}", 2) for k in range(n))
    sink = n - 1
    dag = Dag(nodes, frozenset((k, sink) for k in range(sink)))
    root = np.array([[p0, 1.0 - p0]])
    rows = 2 ** (n - 1)
    sink_cpt = np.zeros((rows, 2))
    sink_cpt[0, 0] = 1.0  # only the all-zero parent assignment gives 0
    sink_cpt[1:, 1] = 1.0
    return BayesNet(dag, tuple([root] * sink + [sink_cpt]))


def random_cpts(dag: Dag, seed: int, low: float = 0.1, high: float = 0.9) -> BayesNet:
    """CPT rows with entries drawn uniformly in [low, high] then normalized.

    For binary nodes the P(0) entry is drawn directly, so both entries stay in
    [low, high].
    """
    rng = np.random.default_rng(seed)
    cpts = []
    for i in range(dag.n):
        card = dag.nodes[i].card
        rows = int(np.prod([dag.nodes[p].card for p in dag.parents(i)], dtype=np.int64))
        if card == 2:
            p = rng.uniform(low, high, size=rows)
            cpt = np.column_stack([p, 1.0 - p])
        else:
            raw = rng.uniform(low, high, size=(rows, card))
            cpt = raw / raw.sum(axis=1, keepdims=True)
        cpts.append(cpt)
    return BayesNet(dag, tuple(cpts))


def _parent_index(rows: np.ndarray, parents: Sequence[int], cards: Sequence[int]) -> np.ndarray:
    idx = np.zeros(rows.shape[0], dtype=np.int64)
    for p in parents:
        idx = idx * cards[p] + rows[:, p]
    return idx


def sample_dataset(net: BayesNet, k: int, seed: int) -> Dataset:
    """Ancestral sampling of ``k`` i.i.d. rows."""
    if k < 0:
        raise InvalidParameter("sample count must be nonnegative")
    rng = np.random.default_rng(seed)
    cards = net.dag.cards
    rows = np.zeros((int(k), net.n), dtype=np.int64)
    for i in net.dag.topological_order:
        pa = net.dag.parents(i)
        cum = np.cumsum(net.cpts[i], axis=1)
        u = rng.random(int(k))
        if pa:
            cum_rows = cum[_parent_index(rows, pa, cards)]
            vals = (cum_rows <= u[:, None]).sum(axis=1)
        else:
            vals = np.searchsorted(cum[0], u, side="right")
        rows[:, i] = np.minimum(vals, cards[i] - 1)
    return Dataset(net.variables, rows)


def _check_triple(n: int, i: int, j: int, b: Iterable[int]) -> tuple[int, ...]:
    b = tuple(sorted(set(int(x) for x in b)))
    if i == j:
        raise InvalidParameter("CI query needs two distinct variables")
    for x in (i, j, *b):
        if not 0 <= x < n:
            raise InvalidParameter(f"node {x} out of range")
    if i in b or j in b:
        raise InvalidParameter("conditioning set must exclude the tested pair")
    return b


def _slices(joint: JointTable, i: int, j: int, b: tuple[int, ...]) -> np.ndarray:
    """P(x, y, z) as an array of shape (card_i, card_j, M)."""
    keep = [i, j, *b]
    drop = tuple(a for a in range(joint.n) if a not in keep)
    marg = joint.probs.sum(axis=drop) if drop else joint.probs
    remaining = [a for a in range(joint.n) if a in keep]
    marg = marg.transpose([remaining.index(a) for a in keep])
    ci, cj = joint.variables[i].card, joint.variables[j].card
    return marg.reshape(ci, cj, -1)


def exact_ci(joint: JointTable, i: int, j: int, b: Iterable[int] = ()) -> bool:
    b = _check_triple(joint.n, i, j, b)
    p = _slices(joint, i, j, b)
    pz = p.sum(axis=(0, 1))
    live = pz > 0
    cond = p[:, :, live] / pz[live]
    prod = cond.sum(axis=1)[:, None, :] * cond.sum(axis=0)[None, :, :]
    return bool(np.all(np.abs(cond - prod) <= CI_TOL))


def tv_to_ci_surrogate(joint: JointTable, i: int, j: int, b: Iterable[int] = ()) -> float:
    """Total variation between P and Q(x,y,z) = P(z) P(x|z) P(y|z).

    Q is conditionally independent, so this bounds the distance to the CI set
    from above. Returns exactly 0.0 whenever ``exact_ci`` holds.
    """
    b = _check_triple(joint.n, i, j, b)
    if exact_ci(joint, i, j, b):
        return 0.0
    p = _slices(joint, i, j, b)
    pz = p.sum(axis=(0, 1))
    live = pz > 0
    pl = p[:, :, live]
    q = pl.sum(axis=1)[:, None, :] * pl.sum(axis=0)[None, :, :] / pz[live]
    return float(0.5 * np.abs(pl - q).sum())


def weakest_dependence(joint: JointTable) -> float:
    """Smallest TV surrogate over all dependent (i, j | B) triples.

    A usable value for the minimum-dependence constant of the tester.
    """
    best = math.inf
    n = joint.n
    for i, j in itertools.combinations(range(n), 2):
        rest = [k for k in range(n) if k not in (i, j)]
        for size in range(len(rest) + 1):
            for b in itertools.combinations(rest, size):
                tv = tv_to_ci_surrogate(joint, i, j, b)
                if tv > 0:
                    best = min(best, tv)
    if best == math.inf:
        raise InvalidParameter("every pair is conditionally independent under every set")
    return best

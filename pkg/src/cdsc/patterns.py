"""Partially directed graphs, v-structures and Meek orientation closure."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import InvalidParameter, MissingSepSet, OrientationConflict
from .model import Dag, JointTable, Variable, exact_ci

SepSets = Mapping[frozenset, tuple]


def _pair(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class Pattern:
    n: int
    directed: frozenset[tuple[int, int]] = frozenset()
    undirected: frozenset[tuple[int, int]] = frozenset()

    def __post_init__(self):
        d = frozenset((int(a), int(b)) for a, b in self.directed)
        u = frozenset(_pair(int(a), int(b)) for a, b in self.undirected)
        object.__setattr__(self, "directed", d)
        object.__setattr__(self, "undirected", u)
        for a, b in d | u:
            if a == b:
                raise InvalidParameter(f"self-loop on node {a}")
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise InvalidParameter(f"edge {(a, b)} out of range")
        dsk = [_pair(a, b) for a, b in d]
        if len(set(dsk)) != len(dsk) or set(dsk) & u:
            raise InvalidParameter("a pair may carry only one edge")

    def adjacent(self, a: int, b: int) -> bool:
        return (a, b) in self.directed or (b, a) in self.directed or _pair(a, b) in self.undirected

    def skeleton(self) -> frozenset[tuple[int, int]]:
        return frozenset(_pair(a, b) for a, b in self.directed) | self.undirected

    def neighbors(self, a: int) -> set[int]:
        return {b for b in range(self.n) if b != a and self.adjacent(a, b)}


def ancestors(dag: Dag, i: int) -> frozenset[int]:
    if not 0 <= i < dag.n:
        raise InvalidParameter(f"node {i} out of range")
    seen: set[int] = set()
    stack = list(dag.parents(i))
    while stack:
        p = stack.pop()
        if p not in seen:
            seen.add(p)
            stack.extend(dag.parents(p))
    return frozenset(seen)


def _has_cycle(n: int, edges: Iterable[tuple[int, int]]) -> bool:
    children: dict[int, list[int]] = {k: [] for k in range(n)}
    indeg = [0] * n
    for a, b in edges:
        children[a].append(b)
        indeg[b] += 1
    ready = [k for k in range(n) if indeg[k] == 0]
    seen = 0
    while ready:
        k = ready.pop()
        seen += 1
        for c in children[k]:
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
    return seen != n


def find_v_structures(skeleton: Pattern, sep: SepSets) -> set[tuple[int, int, int]]:
    """Triples (i, k, j), i < j, with i-k-j adjacent, i,j non-adjacent, k not in S_ij."""
    if skeleton.directed:
        raise InvalidParameter("v-structure search expects an undirected skeleton")
    out = set()
    for k in range(skeleton.n):
        nbrs = sorted(skeleton.neighbors(k))
        for i, j in itertools.combinations(nbrs, 2):
            if skeleton.adjacent(i, j):
                continue
            key = frozenset((i, j))
            if key not in sep:
                raise MissingSepSet(f"no separating set recorded for pair {(i, j)}")
            if k not in sep[key]:
                out.add((i, k, j))
    return out


def orient_v_structures(skeleton: Pattern, vs: Iterable[tuple[int, int, int]]) -> Pattern:
    directed: set[tuple[int, int]] = set()
    for i, k, j in sorted(vs):
        for a in (i, j):
            if (k, a) in directed:
                raise OrientationConflict((a, k))
            directed.add((a, k))
    und = {e for e in skeleton.undirected if e not in {_pair(a, b) for a, b in directed}}
    return Pattern(skeleton.n, frozenset(directed), frozenset(und))


class _Graph:
    """Mutable adjacency view used during closure."""

    def __init__(self, p: Pattern):
        self.n = p.n
        self.directed = set(p.directed)
        self.undirected = set(p.undirected)

    def adj(self, a, b):
        return (a, b) in self.directed or (b, a) in self.directed or _pair(a, b) in self.undirected

    def und(self, a, b):
        return _pair(a, b) in self.undirected

    def arrow(self, a, b):
        return (a, b) in self.directed


def _rule1(g: _Graph):
    for b, c in sorted(g.undirected):
        for x, y in ((b, c), (c, b)):
            # a -> x, x - y, a and y non-adjacent  =>  x -> y
            if any(g.arrow(a, x) and not g.adj(a, y) for a in range(g.n) if a not in (x, y)):
                yield (x, y)


def _rule2(g: _Graph):
    for a, c in sorted(g.undirected):
        for x, y in ((a, c), (c, a)):
            # x -> b -> y, x - y  =>  x -> y
            if any(g.arrow(x, b) and g.arrow(b, y) for b in range(g.n) if b not in (x, y)):
                yield (x, y)


def _rule3(g: _Graph):
    for a, b in sorted(g.undirected):
        for x, y in ((a, b), (b, a)):
            # x - c, x - d, c -> y, d -> y, c and d non-adjacent  =>  x -> y
            cands = [c for c in range(g.n) if c not in (x, y) and g.und(x, c) and g.arrow(c, y)]
            if any(not g.adj(c, d) for c, d in itertools.combinations(cands, 2)):
                yield (x, y)


def _rule4(g: _Graph):
    for a, b in sorted(g.undirected):
        for x, y in ((a, b), (b, a)):
            # x - c, c -> d, d -> y, c and y non-adjacent, x adjacent to d  =>  x -> y
            hit = False
            for d in range(g.n):
                if d in (x, y) or not g.arrow(d, y) or not g.adj(x, d):
                    continue
                for c in range(g.n):
                    if c in (x, y, d):
                        continue
                    if g.und(x, c) and g.arrow(c, d) and not g.adj(c, y):
                        hit = True
                        break
                if hit:
                    break
            if hit:
                yield (x, y)


RULES = (_rule1, _rule2, _rule3, _rule4)


def meek_close(p: Pattern) -> Pattern:
    """Apply Meek rules R1-R4 to a fixed point.

    Each rule's proposals are computed against the current graph before any is
    applied, so two proposals for opposite directions of one edge surface as
    ``OrientationConflict`` instead of being resolved by visiting order.
    """
    if _has_cycle(p.n, p.directed):
        raise OrientationConflict(next(iter(sorted(p.directed))), "directed edges already contain a cycle")
    g = _Graph(p)
    changed = True
    while changed:
        changed = False
        for rule in RULES:
            proposals = set(rule(g))
            for x, y in sorted(proposals):
                if (y, x) in proposals:
                    raise OrientationConflict((x, y))
            for x, y in sorted(proposals):
                g.undirected.discard(_pair(x, y))
                g.directed.add((x, y))
                changed = True
    if _has_cycle(g.n, g.directed):
        raise OrientationConflict(next(iter(sorted(g.directed))), "orientation produced a directed cycle")
    return Pattern(p.n, frozenset(g.directed), frozenset(g.undirected))


def dag_v_structures(dag: Dag) -> frozenset[tuple[int, int, int]]:
    skel = dag.skeleton()
    out = set()
    for k in range(dag.n):
        for i, j in itertools.combinations(dag.parents(k), 2):
            if _pair(i, j) not in skel:
                out.add((i, k, j))
    return frozenset(out)


def pattern_of_dag(dag: Dag) -> Pattern:
    vs = dag_v_structures(dag)
    directed = {(i, k) for i, k, _ in vs} | {(j, k) for _, k, j in vs}
    und = {e for e in dag.skeleton() if e not in {_pair(a, b) for a, b in directed}}
    return meek_close(Pattern(dag.n, frozenset(directed), frozenset(und)))


def patterns_equal(a: Pattern, b: Pattern) -> bool:
    if a.n != b.n:
        raise InvalidParameter("patterns have different node counts")
    return a.directed == b.directed and a.undirected == b.undirected


def d_separated(dag: Dag, i: int, j: int, b: Iterable[int]) -> bool:
    """Graphical d-separation via the moralized ancestral graph."""
    b = set(b)
    keep = {i, j} | b
    for x in list(keep):
        keep |= ancestors(dag, x)
    adj: dict[int, set[int]] = {x: set() for x in keep}
    for x in keep:
        pa = [p for p in dag.parents(x) if p in keep]
        for p in pa:
            adj[x].add(p)
            adj[p].add(x)
        for p, q in itertools.combinations(pa, 2):
            adj[p].add(q)
            adj[q].add(p)
    seen, stack = {i}, [i]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if y == j:
                return False
            if y not in seen and y not in b:
                seen.add(y)
                stack.append(y)
    return True


def is_faithful(dag: Dag, joint: JointTable) -> bool:
    """True when every CI relation in ``joint`` matches d-separation in ``dag``."""
    nodes = range(dag.n)
    for i, j in itertools.combinations(nodes, 2):
        rest = [k for k in nodes if k not in (i, j)]
        for size in range(len(rest) + 1):
            for cond in itertools.combinations(rest, size):
                if exact_ci(joint, i, j, cond) != d_separated(dag, i, j, cond):
                    return False
    return True


def enumerate_dags(n: int, card: int = 2) -> list[Dag]:
    """Every labelled DAG on ``n`` nodes (feasible for n <= 5)."""
    nodes = tuple(Variable(f"X{k + 1}", card) for k in range(n))
    pairs = list(itertools.combinations(range(n), 2))
    out = []
    for states in itertools.product((0, 1, 2), repeat=len(pairs)):
        edges = [(a, b) if s == 1 else (b, a) for (a, b), s in zip(pairs, states) if s]
        if not _has_cycle(n, edges):
            out.append(Dag(nodes, frozenset(edges)))
    return out

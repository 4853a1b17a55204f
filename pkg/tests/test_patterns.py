import itertools
from collections import defaultdict

import networkx as nx
import pytest

from cdsc.errors import InvalidParameter, MissingSepSet, OrientationConflict
from cdsc.model import Dag
from cdsc.patterns import (
    Pattern,
    ancestors,
    dag_v_structures,
    d_separated,
    enumerate_dags,
    find_v_structures,
    meek_close,
    pattern_of_dag,
    patterns_equal,
)

from conftest import binary_nodes

DAGS3 = enumerate_dags(3)
DAGS4 = enumerate_dags(4)


def dag(n, *edges):
    return Dag(binary_nodes(n), frozenset(edges))


def test_dag_counts():
    # number of labelled DAGs: 1, 3, 25, 543
    assert len(enumerate_dags(2)) == 3
    assert len(DAGS3) == 25
    assert len(DAGS4) == 543


def test_ancestors():
    assert ancestors(dag(3, (0, 2), (1, 2)), 2) == {0, 1}
    assert ancestors(dag(3, (0, 1), (1, 2)), 2) == {0, 1}
    assert ancestors(dag(3, (0, 1)), 2) == frozenset()


def test_ancestors_match_networkx():
    for g in DAGS4:
        nxg = nx.DiGraph(list(g.edges))
        nxg.add_nodes_from(range(4))
        for i in range(4):
            assert ancestors(g, i) == nx.ancestors(nxg, i)
            assert i not in ancestors(g, i)


def test_pattern_collider():
    p = pattern_of_dag(dag(3, (0, 2), (1, 2)))
    assert p.directed == {(0, 2), (1, 2)}
    assert not p.undirected


def test_pattern_chain_and_edge():
    assert pattern_of_dag(dag(3, (0, 1), (1, 2))).undirected == {(0, 1), (1, 2)}
    p = pattern_of_dag(dag(2, (0, 1)))
    assert p.undirected == {(0, 1)} and not p.directed


def test_find_v_structures_examples():
    skel = Pattern(3, undirected={(0, 2), (1, 2)})
    assert find_v_structures(skel, {frozenset((0, 1)): ()}) == {(0, 2, 1)}
    chain = Pattern(3, undirected={(0, 1), (1, 2)})
    assert find_v_structures(chain, {frozenset((0, 2)): (1,)}) == set()
    tri = Pattern(3, undirected={(0, 1), (1, 2), (0, 2)})
    assert find_v_structures(tri, {}) == set()


def test_find_v_structures_missing_sepset():
    with pytest.raises(MissingSepSet):
        find_v_structures(Pattern(3, undirected={(0, 2), (1, 2)}), {})


def test_meek_r1_example():
    p = Pattern(4, directed={(0, 2), (1, 2)}, undirected={(2, 3)})
    assert meek_close(p).directed == {(0, 2), (1, 2), (2, 3)}


def test_meek_leaves_undirected_chain():
    p = Pattern(3, undirected={(0, 1), (1, 2)})
    assert patterns_equal(meek_close(p), p)


def test_meek_triangle_with_one_arrow_unchanged():
    p = Pattern(3, directed={(0, 1)}, undirected={(1, 2), (0, 2)})
    assert patterns_equal(meek_close(p), p)


def test_meek_r2():
    p = Pattern(3, directed={(0, 1), (1, 2)}, undirected={(0, 2)})
    assert meek_close(p).directed == {(0, 1), (1, 2), (0, 2)}


def test_meek_r3():
    # a=0 undirected to b=1, c=2, d=3; c -> b, d -> b; c, d non-adjacent
    p = Pattern(4, directed={(2, 1), (3, 1)}, undirected={(0, 1), (0, 2), (0, 3)})
    assert (0, 1) in meek_close(p).directed


def test_meek_r4():
    # x=0 - y=1, x - c=2, c -> d=3, d -> y, c and y non-adjacent, x - d
    p = Pattern(4, directed={(2, 3), (3, 1)}, undirected={(0, 1), (0, 2), (0, 3)})
    assert (0, 1) in meek_close(p).directed


def test_meek_conflict_on_cycle():
    with pytest.raises(OrientationConflict):
        meek_close(Pattern(3, directed={(0, 1), (1, 2), (2, 0)}))


def test_patterns_equal_examples():
    chain = pattern_of_dag(dag(3, (0, 1), (1, 2)))
    collider = pattern_of_dag(dag(3, (0, 1), (2, 1)))
    assert patterns_equal(chain, chain)
    assert not patterns_equal(chain, collider)
    a = Pattern(3, undirected=[(0, 1), (1, 2)])
    b = Pattern(3, undirected=[(2, 1), (1, 0)])
    assert patterns_equal(a, b)
    with pytest.raises(InvalidParameter):
        patterns_equal(a, Pattern(4))


def test_pattern_rejects_double_edges():
    with pytest.raises(InvalidParameter):
        Pattern(2, directed={(0, 1)}, undirected={(0, 1)})
    with pytest.raises(InvalidParameter):
        Pattern(2, directed={(0, 1), (1, 0)})


def _dsep_signature(g):
    nxg = nx.DiGraph(list(g.edges))
    nxg.add_nodes_from(range(g.n))
    sig = []
    for i, j in itertools.combinations(range(g.n), 2):
        rest = [k for k in range(g.n) if k not in (i, j)]
        for size in range(len(rest) + 1):
            for b in itertools.combinations(rest, size):
                sig.append(nx.is_d_separator(nxg, {i}, {j}, set(b)))
    return tuple(sig)


@pytest.mark.parametrize("dags", [DAGS3, DAGS4], ids=["n3", "n4"])
def test_pattern_matches_brute_force_equivalence_classes(dags):
    """Classes from d-separation signatures (networkx); an edge is directed in the
    pattern iff every member DAG orients it the same way."""
    classes = defaultdict(list)
    for g in dags:
        classes[_dsep_signature(g)].append(g)
    for members in classes.values():
        n = members[0].n
        skel = members[0].skeleton()
        directed, undirected = set(), set()
        for a, b in skel:
            orient = {(a, b) in g.edges for g in members}
            if orient == {True}:
                directed.add((a, b))
            elif orient == {False}:
                directed.add((b, a))
            else:
                undirected.add((a, b))
        expected = Pattern(n, frozenset(directed), frozenset(undirected))
        for g in members:
            assert patterns_equal(pattern_of_dag(g), expected)


def test_pattern_equality_iff_skeleton_and_v_structures():
    keyed = [((g.skeleton(), dag_v_structures(g)), pattern_of_dag(g)) for g in DAGS4]
    for (k1, p1), (k2, p2) in itertools.combinations(keyed, 2):
        assert patterns_equal(p1, p2) == (k1 == k2)


def test_dag_consistent_with_its_pattern():
    for g in DAGS4:
        p = pattern_of_dag(g)
        assert p.directed <= g.edges
        assert p.skeleton() == g.skeleton()


def test_meek_idempotent_and_monotone():
    for g in DAGS4:
        # start from the v-structure-only pattern, then close twice
        vs = dag_v_structures(g)
        directed = {(i, k) for i, k, _ in vs} | {(j, k) for _, k, j in vs}
        und = {e for e in g.skeleton() if e not in {(min(a, b), max(a, b)) for a, b in directed}}
        start = Pattern(g.n, frozenset(directed), frozenset(und))
        once = meek_close(start)
        assert patterns_equal(meek_close(once), once)
        assert start.directed <= once.directed
        assert once.skeleton() == start.skeleton()


def test_d_separated_matches_networkx():
    for g in DAGS4:
        nxg = nx.DiGraph(list(g.edges))
        nxg.add_nodes_from(range(4))
        for i, j in itertools.combinations(range(4), 2):
            rest = [k for k in range(4) if k not in (i, j)]
            for size in range(3):
                for b in itertools.combinations(rest, size):
                    assert d_separated(g, i, j, b) == nx.is_d_separator(nxg, {i}, {j}, set(b))

import itertools

import numpy as np
import pytest

from cdsc.model import BayesNet, Dag, Variable, joint_from_net, or_gate_model

ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


def binary_nodes(n):
    return tuple(Variable(f"X{k + 1}", 2) for k in range(n))


def chain_net(cpt_rows=None):
    """1 -> 2 -> 3 on binary variables (0-based 0 -> 1 -> 2)."""
    dag = Dag(binary_nodes(3), frozenset({(0, 1), (1, 2)}))
    if cpt_rows is None:
        cpts = (
            np.array([[0.3, 0.7]]),
            np.array([[0.8, 0.2], [0.25, 0.75]]),
            np.array([[0.6, 0.4], [0.1, 0.9]]),
        )
    else:
        cpts = cpt_rows
    return BayesNet(dag, cpts)


def brute_force_ci(joint, i, j, b, tol=1e-10):
    """Loop-based CI check over the flat table, independent of numpy slicing."""
    cards = [v.card for v in joint.variables]
    table = {}
    for idx, x in enumerate(itertools.product(*[range(c) for c in cards])):
        table[x] = joint.flat[idx]
    for z in itertools.product(*[range(cards[k]) for k in b]):
        def mass(pred):
            return sum(p for x, p in table.items() if all(x[k] == v for k, v in zip(b, z)) and pred(x))
        pz = mass(lambda x: True)
        if pz <= 0:
            continue
        for xi in range(cards[i]):
            for yj in range(cards[j]):
                pxy = mass(lambda x: x[i] == xi and x[j] == yj) / pz
                px = mass(lambda x: x[i] == xi) / pz
                py = mass(lambda x: x[j] == yj) / pz
                if abs(pxy - px * py) > tol:
                    return False
    return True


@pytest.fixture
def or3():
    return or_gate_model(3, 0.6)


@pytest.fixture
def or3_joint(or3):
    return joint_from_net(or3)


@pytest.fixture
def chain():
    return chain_net()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k.split()[0])):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {key}: {detail}")

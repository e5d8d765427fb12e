import numpy as np
import pytest

from fairsc.affinity import graph_affinity, rbf_affinity
from fairsc.fairness import build_constraint


def random_kernel_problem(seed, n=30, d=3, h=2):
    """Small RBF instance with every group present."""
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((n, d))
    labels = np.arange(n) % h
    rng.shuffle(labels)
    model = rbf_affinity(pts)
    return model, build_constraint(labels, model.degree), labels


def random_graph_problem(seed, n=30, h=2):
    rng = np.random.default_rng(seed)
    W = np.triu(rng.random((n, n)), 1)
    W = W + W.T
    labels = np.arange(n) % h
    rng.shuffle(labels)
    model = graph_affinity(W)
    return model, build_constraint(labels, model.degree), labels


@pytest.fixture
def kernel_problem():
    return random_kernel_problem(0)


ACCEPTANCE_LINES = []


def report(label, ok, detail):
    """Record one acceptance line, shown in the terminal summary."""
    line = f"{'PASS' if ok else 'FAIL'} criterion {label}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

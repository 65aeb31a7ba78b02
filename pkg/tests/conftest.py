import itertools

import pytest

from cliquepack.graph import GraphState, Seed, sample_gnp


def brute_cliques(g, k):
    return [
        s for s in itertools.combinations(range(g.n), k)
        if all(g.has_edge(u, v) for u, v in itertools.combinations(s, 2))
    ]


def brute_y(g, k, forced):
    """k-cliques of g + (pairs inside ``forced``) that contain ``forced``."""
    forced = tuple(sorted(forced))
    if k < len(forced):
        return 0
    rest = [v for v in range(g.n) if v not in forced]
    count = 0
    for extra in itertools.combinations(rest, k - len(forced)):
        vs = forced + extra
        ok = all(
            g.has_edge(u, v) or (u in forced and v in forced)
            for u, v in itertools.combinations(vs, 2)
        )
        count += ok
    return count


def cycle(n):
    return GraphState.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


@pytest.fixture
def k4():
    return GraphState.complete(4)


@pytest.fixture
def two_triangles():
    return GraphState.from_edges(6, [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)])


@pytest.fixture
def g12():
    return sample_gnp(12, 0.5, Seed(12))


# acceptance criteria record one line each; printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record_criterion():
    def record(label, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} criterion {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import itertools

import numpy as np
import pytest

_ACCEPTANCE_LINES = []


def record_acceptance(line):
    _ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=_criterion_key):
            terminalreporter.write_line(line)


def _criterion_key(line):
    # lines look like "C07 PASS  title: detail"
    try:
        return int(line[1:3])
    except ValueError:
        return 99


def set_partitions(n):
    """All set partitions of range(n) as lists of block sizes (restricted growth strings)."""
    def rgs(prefix, m):
        if len(prefix) == n:
            yield prefix
            return
        for v in range(m + 2):
            yield from rgs(prefix + [v], max(m, v))

    if n == 0:
        yield []
        return
    for s in rgs([0], 0):
        yield list(np.bincount(s))


def integer_partitions(n, largest=None):
    largest = n if largest is None else largest
    if n == 0:
        yield []
        return
    for k in range(min(n, largest), 0, -1):
        for rest in integer_partitions(n - k, k):
            yield [k] + rest


def compositions(n, parts):
    """All vectors of ``parts`` non-negative ints summing to n."""
    for cuts in itertools.combinations(range(n + parts - 1), parts - 1):
        prev = -1
        out = []
        for c in cuts + (n + parts - 1,):
            out.append(c - prev - 1)
            prev = c
        yield out


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)

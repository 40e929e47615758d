import pytest

from kei.core import KeiInstance


@pytest.fixture
def three_cycle():
    """Three pairs whose only exchange is a 3-cycle with two half edges.

    r0 is compatible with d1, d2 is half-compatible for r1 and d0 for r2.
    """
    return KeiInstance.build(3, 3, [(0, 0), (1, 1), (2, 2)], compat={0: [1]}, half={1: [2], 2: [0]})


@pytest.fixture
def mixed_pool():
    """Four recipients (r0 single), donors 0..3 with donor 3 altruistic.

    Recipient k >= 1 is paired with donor k - 1.
    """
    return KeiInstance.build(
        4,
        4,
        [(1, 0), (2, 1), (3, 2)],
        compat={0: [0], 1: [2]},
        half={1: [0, 1], 2: [2], 3: [1, 3]},
    )


@pytest.fixture
def silver_pool():
    """The mixed pool with every missing recipient/donor link made half-compatible."""
    compat = {0: [0], 1: [2]}
    half = {r: [d for d in range(4) if d not in compat.get(r, [])] for r in range(4)}
    return KeiInstance.build(4, 4, [(1, 0), (2, 1), (3, 2)], compat=compat, half=half)


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])

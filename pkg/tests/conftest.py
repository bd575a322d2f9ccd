import pytest

from dilutegas import DiscreteWR, SiteSet


@pytest.fixture
def wr_small():
    return DiscreteWR(0.05, 0.05, 1, 2)


@pytest.fixture
def block_2x2():
    return SiteSet([(0, 0), (0, 1), (1, 0), (1, 1)])


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion and fail the test on a miss."""
    lines = request.config.__dict__.setdefault("_acceptance_lines", [])

    def report(number, name, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2} {name}: {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.__dict__.get("_acceptance_lines")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)

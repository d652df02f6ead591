import math

import pytest
from hypothesis import settings

from rwslab.weightlaw import Degenerate, FiniteDiscrete, TwoPoint, UniformInterval

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

E = math.e


@pytest.fixture
def sym_law():
    """Symmetric two-point law on {e, 1/e}: E ln X = 0, (ln X^2)^2 = 4."""
    return TwoPoint(E, 1 / E, 0.5)


LAWS = [
    Degenerate(1.0),
    Degenerate(0.5),
    TwoPoint(E, 1 / E, 0.5),
    TwoPoint(2.0, 0.5, 0.3),
    TwoPoint(3.0, 0.0, 0.5),
    UniformInterval(0.0, 1.0),
    UniformInterval(0.5, 2.0),
    UniformInterval(1.0, 1.5),
    FiniteDiscrete.uniform([0.0, 1.0, 2.0]),
    FiniteDiscrete([0.5, 1.0, 4.0], [0.2, 0.5, 0.3]),
    FiniteDiscrete.uniform([1.0, 2.0]),
]


@pytest.fixture
def acceptance(request):
    """Collect one summary line per acceptance criterion for the terminal report."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def log(number, title, ok, detail, elapsed, budget):
        status = "PASS" if ok and elapsed <= budget else "FAIL"
        line = f"criterion {number:>2} {status}  {title}: {detail} [{elapsed:.1f}s / {budget:g}s]"
        lines.append(line)
        print(line)
        assert elapsed <= budget, f"over runtime budget: {elapsed:.1f}s > {budget}s"
        assert ok, line

    return log


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)

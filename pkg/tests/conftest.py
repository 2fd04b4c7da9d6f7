import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_AC_LINES = []


@pytest.fixture
def ac_report():
    """Record a PASS/FAIL line for an acceptance criterion and print it at the end of the run."""
    def report(ac, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} AC{ac}: {detail}"
        _AC_LINES.append(line)
        print(line)
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if _AC_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_AC_LINES, key=lambda s: int(s.split("AC")[1].split(":")[0])):
            terminalreporter.write_line(line)

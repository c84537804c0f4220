import numpy as np
import pytest

from fdris.geometry import RisGeometry, SphericalPosition, draw_channel

_ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record a one-line acceptance verdict shown in the terminal summary."""

    def _report(name, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else "")
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def small_setup():
    """3x3 panel, two wardens, fixed draw."""
    geom = RisGeometry(l_y=3, l_z=3)
    alice = SphericalPosition.from_degrees(70, 10, 70)
    bob = SphericalPosition.from_degrees(120, 30, 20)
    willies = [SphericalPosition.from_degrees(115, 30, 45), SphericalPosition.from_degrees(85, 50, 30)]
    chan = draw_channel(geom, alice, bob, willies, 10 ** 1.5, np.random.default_rng(7))
    return geom, alice, bob, willies, chan

import numpy as np
import pytest

from symtight.link import PolyLink


def smooth_field(link: PolyLink, rng, modes: int = 3) -> np.ndarray:
    """Random variation field built from low Fourier modes on each component."""
    out = []
    for comp in link.components:
        n = len(comp)
        th = 2 * np.pi * np.arange(n) / n
        f = np.zeros((n, 3))
        for m in range(modes + 1):
            f += np.outer(np.cos(m * th), rng.standard_normal(3))
            if m:
                f += np.outer(np.sin(m * th), rng.standard_normal(3))
        out.append(f)
    return np.vstack(out)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, shown at the end of the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

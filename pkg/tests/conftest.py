import numpy as np
import pytest

from curlcyl import assemble_forms, build_grid, unit_materials


@pytest.fixture(scope="session")
def small_forms_p4():
    """Unit cylinder, 16x16, quartic nonlinearity."""
    g = build_grid(1.0, 0.0, 1.0, 16, 16)
    return assemble_forms(g, unit_materials(g), 4.0)


@pytest.fixture(scope="session")
def small_forms_p6():
    g = build_grid(1.0, 0.0, 1.0, 16, 16)
    return assemble_forms(g, unit_materials(g), 6.0)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def pytest_runtest_logreport(report):
    """Print one scorecard line per acceptance criterion.

    Written via the plain terminal stream after the test finishes, so the
    lines survive output capture and land in piped logs.
    """
    import re

    if report.when != "call":
        return
    m = re.search(r"test_criterion_(\d+)", report.nodeid)
    if not m:
        return
    from test_acceptance import CRITERIA

    n = int(m.group(1))
    verdict = "PASS" if report.passed else "FAIL"
    print(f"\n[criterion {n:2d}] {verdict} — {CRITERIA[n]}")

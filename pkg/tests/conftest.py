import pytest

from nsacwave import MixtureParams, quartic_primitive, tilted_quartic

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict = {}
# extra checks on a substitute well, reported next to the criterion they support
SUPPLEMENTARY: dict = {}


@pytest.fixture(scope="session")
def params():
    return MixtureParams()


@pytest.fixture(scope="session")
def kink_well():
    return tilted_quartic(1.0, 0.2, 0.8, 0.1)


@pytest.fixture(scope="session")
def quartic_well():
    """Reference quartic-primitive well; its Maxwell states lie outside (0, 1)."""
    return quartic_primitive(0.2, 0.6, 1.05, 1.0)


@pytest.fixture(scope="session")
def solvable_well():
    """Quartic-primitive well whose equal-value states lie inside (0, 1)."""
    return quartic_primitive(0.2, 0.4, 1.05, 1.0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    for k in sorted(SUPPLEMENTARY):
        ok, detail = SUPPLEMENTARY[k]
        terminalreporter.write_line(f"supplementary to {k}: {'PASS' if ok else 'FAIL'}  {detail}")

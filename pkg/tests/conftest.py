import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "dev",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
    max_examples=60,
)
settings.load_profile("dev")

from reportloom.evaluation.corpus import base_snapshot  # noqa: E402


@pytest.fixture
def park():
    """The fixed park-operations workspace the committed eval suite evolves."""
    return base_snapshot()


_ACCEPTANCE_OUTCOMES: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        _ACCEPTANCE_OUTCOMES[name] = {
            "passed": "PASS",
            "failed": "FAIL",
            "skipped": "SKIP",
        }[report.outcome]
    elif report.when == "setup" and report.skipped:
        _ACCEPTANCE_OUTCOMES[name] = "SKIP"
    elif report.when == "setup" and report.failed:
        _ACCEPTANCE_OUTCOMES[name] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_OUTCOMES:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name in sorted(_ACCEPTANCE_OUTCOMES):
        terminalreporter.write_line(f"{_ACCEPTANCE_OUTCOMES[name]:<4}  {name}")

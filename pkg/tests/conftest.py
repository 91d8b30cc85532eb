import pytest

_ACCEPTANCE_RESULTS: list[tuple[str, str, str]] = []


def record_acceptance(criterion: str, outcome: str, detail: str) -> None:
    _ACCEPTANCE_RESULTS.append((criterion, outcome, detail))


@pytest.hookimpl(trylast=True)
def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, outcome, detail in sorted(_ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"{criterion} {outcome}: {detail}")

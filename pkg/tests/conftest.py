import pytest

_VERDICTS: list[str] = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line per acceptance criterion and assert it."""

    def record(label: str, checks: dict[str, tuple[bool, str]]):
        bad = [f"{k}: {d}" for k, (ok, d) in checks.items() if not ok]
        line = f"{'PASS' if not bad else 'FAIL'} {label}"
        if bad:
            line += " | " + "; ".join(bad)
        _VERDICTS.append(line)
        print(line)
        assert not bad, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)

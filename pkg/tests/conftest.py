import pytest

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def report():
    """Record one verdict line per acceptance criterion; printed in the terminal summary."""

    def record(criterion: int, parts: list[tuple[str, float, str, bool]]) -> bool:
        ok = all(p[3] for p in parts)
        detail = "; ".join(f"{name} = {value:.6g} ({bound}){'' if good else ' MISS'}" for name, value, bound, good in parts)
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
        ACCEPTANCE_LINES[criterion] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])

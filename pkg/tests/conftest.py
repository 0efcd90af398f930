import pytest

# filled by the acceptance tests; printed once at the end of the run
CRITERIA: dict[int, bool] = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if CRITERIA[number] else 'FAIL'}")


@pytest.fixture
def criterion():
    """Context manager factory recording whether the block for one criterion passed."""
    from contextlib import contextmanager

    @contextmanager
    def record(number: int):
        CRITERIA[number] = False
        try:
            yield
        except BaseException:
            print(f"criterion {number}: FAIL")
            raise
        CRITERIA[number] = True
        print(f"criterion {number}: PASS")

    return record

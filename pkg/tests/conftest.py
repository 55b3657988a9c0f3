"""Shared pytest hooks: the acceptance suite reports one verdict line per criterion."""

VERDICTS = {}


def record(number, passed, detail):
    VERDICTS[number] = (passed, detail)
    print(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(VERDICTS):
        passed, detail = VERDICTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}")

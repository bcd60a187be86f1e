"""Shared pytest hooks."""

import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance-criterion scoreboard after the test run.

    The criterion tests print one PASS/FAIL line each, but pytest's
    file-descriptor capture hides them unless -s is given; replaying
    them here makes the scoreboard visible in any plain `pytest -v`
    run.
    """
    mod = next(
        (m for name, m in sys.modules.items()
         if name.rpartition(".")[2] == "test_acceptance" and m is not None),
        None,
    )
    board = getattr(mod, "SCOREBOARD", None)
    if board:
        terminalreporter.section("acceptance criteria")
        for line in board:
            terminalreporter.write_line(line)

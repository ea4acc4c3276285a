"""Shared pytest hooks.

The acceptance tests are the shipping gate; the terminal summary prints
one line per criterion so a red run names exactly what broke.
"""

from __future__ import annotations

_CRITERIA = {
    1: "oracle inputs reach exact metric ceilings",
    2: "static-mode post-processing lifts mAP_f on every seed",
    3: "matcher family sizes and noise-free distance equivalence",
    4: "gap interpolation never hurts mean HOTA",
    5: "association agrees with exhaustive-permutation optima",
    6: "forecast AP and tracking scores match hand oracles",
    7: "IoU3D bounds, symmetry, and closed-form overlap",
    8: "every CLI subcommand is byte-deterministic",
    9: "tracks terminate after the inactivity limit",
    10: "always-static classes collapse to one sure static mode",
}

_results: dict[int, str] = {}


def _criterion_number(nodeid: str) -> int | None:
    name = nodeid.rsplit("::", 1)[-1]
    if not name.startswith("test_criterion_"):
        return None
    try:
        return int(name.split("_")[2])
    except (IndexError, ValueError):
        return None


def pytest_runtest_logreport(report):
    num = _criterion_number(report.nodeid)
    if num is None:
        return
    if report.when == "call":
        if report.skipped:
            _results[num] = "SKIP"
        else:
            _results[num] = "PASS" if report.passed else "FAIL"
    elif report.failed:
        # Setup or teardown blew up before the criterion ran.
        _results[num] = "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        status = _results.get(num, "NOT RUN")
        terminalreporter.write_line(f"criterion {num:2d}: {status:8s}{_CRITERIA[num]}")

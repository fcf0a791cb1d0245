import os

os.environ.setdefault("NUMBA_NUM_THREADS", str(max(os.cpu_count() or 1, 8)))

from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,  # first kernel call may JIT-compile
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

_acceptance_results: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if "test_acceptance" in report.nodeid and report.when == "call":
        if hasattr(report, "wasxfail"):
            outcome = "xfail: " + report.wasxfail
        else:
            outcome = report.outcome
        _acceptance_results.append((report.nodeid.split("::")[-1], outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance_results:
        if outcome == "passed":
            mark = "PASS"
        elif outcome.startswith("xfail"):
            mark = outcome.upper()
        else:
            mark = "FAIL"
        terminalreporter.write_line(f"[{mark}] {name}")

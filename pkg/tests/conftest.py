import pytest

ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        ACCEPTANCE[name] = report.outcome


@pytest.hookimpl(trylast=True)
def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    from test_acceptance import DETAILS

    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda n: int(n.split("_")[2])):
        verdict = "PASS" if ACCEPTANCE[name] == "passed" else "FAIL"
        detail = DETAILS.get(name, "")
        terminalreporter.write_line(f"{verdict}  {name}  {detail}".rstrip())

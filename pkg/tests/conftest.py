import pytest

from gatesim.simulator import ScenarioSpec, generate_trace
from gatesim.stages import synthetic_enrollment

_criteria = []


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    marker = report.user_properties and dict(report.user_properties).get("criterion")
    if marker:
        _criteria.append((marker, report.outcome))


@pytest.hookimpl(tryfirst=True)
def pytest_runtest_setup(item):
    mark = item.get_closest_marker("criterion")
    if mark:
        item.user_properties.append(("criterion", f"{mark.args[0]}: {mark.args[1]}"))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _criteria:
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{status}] {name}")


@pytest.fixture(scope="session")
def owner_db():
    return synthetic_enrollment("owner", 100, 0.05, seed=0)


@pytest.fixture(scope="session")
def owner_trace():
    return generate_trace(ScenarioSpec(frame_count=1000, seed=0))


@pytest.fixture(scope="session")
def mixed_trace():
    spec = ScenarioSpec(
        frame_count=2000,
        person_presence_rate=0.5,
        owner_fraction=0.5,
        intruder_names=("mallory", "trent"),
        seed=11,
    )
    return generate_trace(spec)

import numpy as np
import pytest

from smallinc.scene import Ball, DipoleSource, InclusionSpec, Scene, WaveContext

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    n, title = props["criterion"]
    ok = report.outcome == "passed"
    _CRITERIA.setdefault(n, []).append((title, ok, props.get("detail", "")))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        for title, ok, detail in _CRITERIA[n]:
            status = "PASS" if ok else "FAIL"
            line = f"criterion {n}: {status}  {title}"
            terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))


@pytest.fixture(autouse=True)
def _criterion_tag(request, record_property):
    m = request.node.get_closest_marker("criterion")
    if m is not None:
        record_property("criterion", tuple(m.args))


@pytest.fixture
def detail(record_property):
    """Attach a measured-value summary to the acceptance line of this test."""
    def put(text):
        record_property("detail", text)
    return put


@pytest.fixture
def natural_scene():
    """Two balls with both contrasts, natural units, source well away."""
    w = WaveContext.natural(1.0)
    incs = [InclusionSpec([0.0, 0.0, 0.0], Ball(1.0), 2.0, 1.5),
            InclusionSpec([2.0, 0.5, 0.0], Ball(0.6), 3.0, 0.7)]
    return Scene(w, 0.1, incs, DipoleSource([0.3, -0.2, 5.0], [1.0, 0.5j, 0.2]), 0.5)


@pytest.fixture
def dielectric_scene():
    """Small dielectric ball, quasi-static-ish regime; cheap to solve."""
    w = WaveContext(1.0, 2.0, 1.0 / np.sqrt(2.0))
    inc = InclusionSpec([0.0, 0.0, 0.0], Ball(1.0), 2.0, 2.0)
    return Scene(w, 0.1, [inc], DipoleSource([0.0, 0.0, 5.0], [1.0, 0.0, 0.3]), 0.5)

import numpy as np
import pytest

from delaynse import default_config, make_lattice, random_solenoidal_field


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        rep.user_properties.append(("criterion", mark.args))


def pytest_terminal_summary(terminalreporter):
    # one line per acceptance criterion, failing if any of its tests failed
    results = {}
    for key in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(key, []):
            props = dict(getattr(rep, "user_properties", ()))
            if "criterion" not in props:
                continue
            num, title = props["criterion"]
            ok = key == "passed" and rep.outcome == "passed"
            prev = results.get(num, (title, True))
            results[num] = (title, prev[1] and ok)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        title, ok = results[num]
        terminalreporter.write_line(f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {title}")


@pytest.fixture(scope="session")
def cfg():
    return default_config()


@pytest.fixture(scope="session")
def lat8():
    return make_lattice(2 * np.pi, 8)


@pytest.fixture(scope="session")
def lat16():
    return make_lattice(2 * np.pi, 16)


@pytest.fixture
def rand8(lat8):
    def make(seed, slope=-2.0, amplitude=1.0):
        return random_solenoidal_field(lat8, slope, amplitude, seed=seed)

    return make

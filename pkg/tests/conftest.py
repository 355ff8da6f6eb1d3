import numpy as np
import pytest

from ambienc.sh import make_grid


@pytest.fixture(scope="session")
def fib_grid():
    return make_grid("fibonacci", count=1922)


@pytest.fixture(scope="session")
def small_fib():
    return make_grid("fibonacci", count=400)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_grid(rng, Q):
    from ambienc.sh import custom_grid

    v = rng.standard_normal((Q, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return custom_grid(np.arccos(np.clip(v[:, 2], -1, 1)), np.arctan2(v[:, 1], v[:, 0]))


_CRITERIA: dict[str, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id, text): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when not in ("setup", "call"):
        return
    cid, text = marker.args
    entry = _CRITERIA.setdefault(cid, {"text": text, "ok": True, "ran": False, "notes": []})
    if report.failed:
        entry["ok"] = False
        entry["notes"].append(item.name)
    if report.when == "call":
        entry["ran"] = True


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_CRITERIA, key=lambda c: (int(c.rstrip("abc")), c)):
        entry = _CRITERIA[cid]
        status = "PASS" if entry["ok"] and entry["ran"] else "FAIL"
        line = f"{status}  criterion {cid}: {entry['text']}"
        if entry["notes"]:
            line += f"  [failed: {', '.join(entry['notes'])}]"
        terminalreporter.write_line(line)

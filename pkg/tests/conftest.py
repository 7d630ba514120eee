import csv
import json

import pytest

_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if call.when != "call" and not (call.when == "setup" and call.excinfo):
        return
    num, title = mark.args
    entry = _criteria.setdefault(num, {"title": title, "ok": True, "tests": []})
    entry["tests"].append(item.name)
    if call.excinfo is not None:
        entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        e = _criteria[num]
        status = "PASS" if e["ok"] else "FAIL"
        terminalreporter.write_line(f"criterion {num:>2}: {status}  {e['title']}")


@pytest.fixture
def game_files(tmp_path):
    """Write a samples CSV plus config for the 2x2 loss game [[2,5],[3,1]]."""

    def make(kernel="gaussian", d=1, h=0.2, spread=0.01, **extra):
        centres = {(1, 1): 2.0, (1, 2): 5.0, (2, 1): 3.0, (2, 2): 1.0}
        path = tmp_path / "samples.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["row", "col", "goal", "value"])
            for g in range(1, d + 1):
                for (r, c), v in centres.items():
                    for dv in (-spread, 0.0, spread):
                        w.writerow([r, c, g, v + dv])
        cfg = {
            "n": 2, "m": 2, "d": d, "kernel": kernel,
            "bandwidth": {"mode": "explicit", "h": h},
            "samples": "samples.csv", "out_dir": "out",
        }
        cfg.update(extra)
        cfg_path = tmp_path / f"config_{kernel}_{d}.json"
        cfg_path.write_text(json.dumps(cfg))
        return cfg_path

    return make

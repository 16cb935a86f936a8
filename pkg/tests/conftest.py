import json

import numpy as np
import pytest

from spinlind.model import NuclearSpinSite, SpinSystem, system_to_dict

GAMMA_H = 2.6752218744e8

ACCEPTANCE_LINES = []


def make_system(positions, hyperfine_MHz=None, name="test", direction=(0.0, 0.0, 1.0), gammas=None):
    positions = np.asarray(positions, dtype=float)
    n = len(positions)
    if hyperfine_MHz is None:
        hyperfine_MHz = [0.0] * n
    if gammas is None:
        gammas = [GAMMA_H] * n
    nuclei = tuple(
        NuclearSpinSite(k, "1H", tuple(float(x) for x in p), float(g), 0.5, float(a))
        for k, (p, a, g) in enumerate(zip(positions, hyperfine_MHz, gammas))
    )
    return SpinSystem(name, nuclei, tuple(direction), 0.35, 2.0023193, (0.0, 0.0, 0.0))


@pytest.fixture
def write_json(tmp_path):
    def _write(obj, name="input.json"):
        path = tmp_path / name
        if isinstance(obj, SpinSystem):
            obj = system_to_dict(obj)
        path.write_text(json.dumps(obj))
        return path

    return _write


@pytest.fixture
def three_protons():
    return make_system(
        [[0.0, 0.0, 0.0], [1.8, 0.2, 0.3], [0.4, 2.1, 1.1]],
        hyperfine_MHz=[1.2, -0.4, 0.3],
        name="three",
    )


@pytest.fixture
def four_protons():
    return make_system(
        [[0.0, 0.0, 0.0], [1.8, 0.2, 0.3], [0.4, 2.1, 1.1], [2.2, 2.6, -0.7]],
        hyperfine_MHz=[1.2, -0.4, 0.3, 0.05],
        name="four",
    )


def record_acceptance(number, description, passed, detail=""):
    status = "PASS" if passed else "FAIL"
    ACCEPTANCE_LINES.append(f"[{status}] criterion {number:>2}: {description} {detail}".rstrip())


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sabrlmm import _backend  # noqa: E402
from sabrlmm.config import load_config  # noqa: E402
from sabrlmm.model import LmmParams  # noqa: E402
from sabrlmm.tenor import MarketCurves  # noqa: E402

ROOT = Path(__file__).resolve().parents[1]
DESK = ROOT / "configs" / "desk15y"

# filled by test_acceptance, printed at the end of the session
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def desk_curves():
    return MarketCurves.flat(0.013, 15.0, 2)


@pytest.fixture(scope="session")
def desk_params(desk_curves):
    return LmmParams.build(desk_curves.tenor, 0.0013, 0.3, 0.15, 0.05)


@pytest.fixture(scope="session")
def desk_config():
    return load_config(DESK / "report.json")


@pytest.fixture(params=_backend.available())
def backend(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'} - {detail}")

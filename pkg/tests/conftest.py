import sys
from pathlib import Path

import pytest

# oracles live next to the tests; the package itself also resolves from the
# source tree so the suite runs without an editable install
sys.path.insert(0, str(Path(__file__).parent))
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))


def pytest_addoption(parser):
    parser.addoption(
        "--paper-scale",
        action="store_true",
        default=False,
        help="run the full-size repetition counts (slow)",
    )


@pytest.fixture
def paper_scale(request):
    return request.config.getoption("--paper-scale")

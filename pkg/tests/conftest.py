import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).resolve().parent
REPO_ROOT = TESTS_DIR.parent

if str(TESTS_DIR) not in sys.path:
    sys.path.insert(0, str(TESTS_DIR))


@pytest.fixture(scope="session")
def repo_root() -> Path:
    return REPO_ROOT


@pytest.fixture(scope="session")
def fixtures_root() -> Path:
    root = REPO_ROOT / "fixtures"
    if not root.exists():
        pytest.skip("fixture suite not built (run scripts/make_fixtures.py)")
    return root


@pytest.fixture(scope="session")
def scripted_config(fixtures_root):
    from car.pipeline import PipelineConfig

    def _make(run_root, **overrides):
        return PipelineConfig(
            provider={"kind": "scripted", "fixtures_root": str(fixtures_root / "providers")},
            run_root=str(run_root),
            asset_index=str(fixtures_root / "assets" / "index.json"),
            **overrides,
        )

    return _make

import pytest

from cwm.model import PredictorConfig, init_params, save_checkpoint
from cwm.world import make_specs, write_dataset

TINY = PredictorConfig(embed_dim=32, enc_layers=1, dec_layers=1, heads=2)

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record_acceptance():
    """Collects one PASS/FAIL line per acceptance criterion for the
    terminal summary (pytest captures stdout during the test itself)."""
    return _ACCEPTANCE_LINES.append


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def tiny_ckpt(tmp_path_factory):
    """An untrained 64x64 checkpoint; enough to exercise IO and plumbing."""
    path = tmp_path_factory.mktemp("ckpt") / "tiny.cwmc"
    save_checkpoint(init_params(TINY, seed=0), TINY, path)
    return path


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("data") / "ds"
    write_dataset(make_specs(3, "single-mover", seed=7), out,
                  "single-mover", 7)
    return out

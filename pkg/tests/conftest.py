from pathlib import Path

import pytest

from fdqn.config import TrainConfig, apply_overrides

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture
def config_dir():
    return CONFIG_DIR


@pytest.fixture
def small_cartpole(tmp_path):
    """A CartPole run short enough for unit tests."""
    cfg = TrainConfig(
        env_name="cartpole",
        num_episodes=12,
        seed=3,
        checkpoint_path=str(tmp_path / "run.fdqn"),
        metrics_path=str(tmp_path / "metrics.txt"),
        record_wall_time=False,
    )
    return apply_overrides(cfg, ["agent.batch_size=16", "agent.learn_start=50", "agent.learning_rate=0.001",
                                 "network.hidden_sizes=[16, 16]"])


_REPORT = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_REPORT] = []


@pytest.fixture
def acceptance_report(request):
    """List of (criterion, passed, detail) lines printed after the run."""
    return request.config.stash[_REPORT]


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_REPORT, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, detail in lines:
        terminalreporter.write_line(f"{status:8s} {name}: {detail}")

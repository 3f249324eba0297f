import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from config import ChannelConfig, RunConfig, TrainConfig  # noqa: E402
from netgen import generate_dataset  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_config() -> RunConfig:
    """Three links, two frames, a handful of layouts; fast enough for every test."""
    return RunConfig(
        channel=ChannelConfig(n_links=3, frames=2, train_layouts=6, test_layouts=4),
        train=TrainConfig(iterations=3, batch_size=4, decay_interval=1, log_every=1),
    )


@pytest.fixture
def small_dataset(small_config):
    return generate_dataset(small_config.channel, 6, seed=7)


@pytest.fixture
def app_dirs(tmp_path, monkeypatch):
    monkeypatch.setenv("AIRGNN_DATA_DIR", str(tmp_path / "data"))
    monkeypatch.setenv("AIRGNN_CHECKPOINT_DIR", str(tmp_path / "checkpoints"))
    monkeypatch.setenv("AIRGNN_RESULTS_DIR", str(tmp_path / "results"))
    return tmp_path


def random_channels(rng: np.random.Generator, k: int, batch: int | None = None) -> np.ndarray:
    """Complex coefficients with power gains in [1e-2, 1]."""
    shape = (k, k) if batch is None else (batch, k, k)
    magnitude = np.sqrt(10.0 ** rng.uniform(-2.0, 0.0, size=shape))
    return magnitude * np.exp(2j * np.pi * rng.uniform(size=shape))


@pytest.fixture
def make_channels():
    return random_channels

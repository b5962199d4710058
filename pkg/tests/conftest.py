import numpy as np
import pytest

from csvm.net import BlockSpec, TrainConfig
from csvm.layers import PoolSpec
from csvm.synthetic import write_stripes_dataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_cfg():
    return TrainConfig(per_image_patches=5, subset_per_class=20, patch_source_images=50,
                       max_iter=200, master_seed=7)


@pytest.fixture
def small_arch():
    return [
        BlockSpec(4, 5, 2, PoolSpec(3, 2)),
        BlockSpec(6, 3, 1, PoolSpec(2, 2)),
    ]


@pytest.fixture(scope="session")
def stripes_dir(tmp_path_factory):
    """40-image stripes dataset on disk (20 per class), 32 x 32."""
    root = tmp_path_factory.mktemp("stripes")
    return write_stripes_dataset(root, 20, seed=3, size=32)


@pytest.fixture(scope="session")
def stripes128_dir(tmp_path_factory):
    """200-image stripes dataset at the default 128 x 128 input size."""
    root = tmp_path_factory.mktemp("stripes128")
    return write_stripes_dataset(root, 100, seed=11, size=128)


_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

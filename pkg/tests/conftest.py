import pytest

from tapersim.core.config import Config, GridConfig
from tapersim.experiments import RunContext
from tapersim.field import make_grid
from tapersim.inscription import MaterialModel


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run tests that calibrate the material model first")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def grid():
    # 0.5 um cells, wide enough for the default regular mode
    return make_grid(60.0, 60.0, 120, 120)


@pytest.fixture
def model():
    return MaterialModel()


@pytest.fixture
def small_config(tmp_path):
    config = Config(grid=GridConfig(extent_x=60.0, extent_y=60.0, nx=120, ny=120), workers=2,
                    output_dir=str(tmp_path))
    config.sweeps.power_ratios = [0.667]
    config.sweeps.wavelengths = [800.0]
    return config


@pytest.fixture
def context(tmp_path):
    return RunContext(output_dir=tmp_path, model=MaterialModel())

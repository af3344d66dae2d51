import os

import numpy as np
import pytest

from utils import WorldBuilder, small_spec


@pytest.fixture(scope="session", autouse=True)
def temp_config(tmpdir_factory):
    # this function runs on start of test session.
    # use temporary directory for config home so user config will not be used
    os.environ["XDG_CONFIG_HOME"] = str(tmpdir_factory.mktemp("data"))
    os.environ.pop("METROSIM_OUTPUT_DIR", None)
    os.environ.pop("METROSIMRC", None)


@pytest.fixture
def builder():
    return WorldBuilder()


@pytest.fixture
def spec():
    return small_spec()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

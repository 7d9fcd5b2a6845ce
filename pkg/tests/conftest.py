"""Shared fixtures: tiny datasets are expensive enough to build once."""

import pytest

from shapenergy.dataset import DatasetConfig, generate
from shapenergy.geometry import GeometryConfig
from shapenergy.weather import SiteSpec, SyntheticWeatherConfig, synthesize_weather


@pytest.fixture(scope="session")
def geometry_config():
    return GeometryConfig()


@pytest.fixture(scope="session")
def synthetic_weather():
    return synthesize_weather(SyntheticWeatherConfig(), SiteSpec())


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """12 samples: enough for split/normalizer/training smoke tests."""
    out = tmp_path_factory.mktemp("ds") / "tiny"
    return generate(DatasetConfig(n_samples=12, seed=7), out), out

# tests/conftest.py
import logging
from typing import Callable

import numpy as np
import pytest

from common.config import configure_structlog, is_configured
from app.core import init_network
from app.data import gaussian_blob, unlabeled_gaussian
from app.schemas import Dataset, Network, NetworkConfig, NormKind, NormPlacement

ENV_KEYS = (
    "IGB_ENVIRONMENT",
    "IGB_LOG_LEVEL",
    "IGB_LOG_FORMAT",
    "IGB_OUT_DIR",
    "IGB_THREADS",
    "IGB_SEED",
    "IGB_RUNS",
)


@pytest.fixture(scope="session", autouse=True)
def structlog_configured() -> None:
    # same level initialize_config() picks with a clean environment
    if not is_configured():
        configure_structlog(logging.INFO)


@pytest.fixture
def clean_env(monkeypatch: pytest.MonkeyPatch) -> pytest.MonkeyPatch:
    for key in ENV_KEYS:
        monkeypatch.delenv(key, raising=False)
    return monkeypatch


@pytest.fixture
def make_config() -> Callable[..., NetworkConfig]:
    """Small network configs: 8 inputs, one hidden layer of 16, 2 classes."""

    def _make(
        norm_kind: NormKind = NormKind.NONE,
        placement: NormPlacement = NormPlacement.ABSENT,
        **overrides: object,
    ) -> NetworkConfig:
        fields: dict = dict(
            input_dim=8,
            hidden_widths=(16,),
            num_classes=2,
            norm_kind=norm_kind,
            placement=placement,
        )
        fields.update(overrides)
        return NetworkConfig(**fields)

    return _make


@pytest.fixture
def small_net(make_config: Callable[..., NetworkConfig]) -> Network:
    return init_network(make_config(), seed=3)


@pytest.fixture
def gaussian_inputs() -> Dataset:
    return unlabeled_gaussian(200, 8, seed=11)


@pytest.fixture
def blob() -> Dataset:
    return gaussian_blob(n_per_class=100, d=8, mu_scale=4.0, seed=5)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)

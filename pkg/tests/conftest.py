import numpy as np
import pytest

from impactlab.params import CdfSpec, ModelParams, SigmaSpec


@pytest.fixture(scope="session")
def fig_params() -> ModelParams:
    """The reference parameter set used throughout the figures and checks."""
    return ModelParams(
        alpha=10.0,
        gamma=1.0,
        theta=0.2,
        F=CdfSpec.uniform(1.2),
        sigma=SigmaSpec.assumption1(1.0),
    )


@pytest.fixture(scope="session")
def driftless_params() -> ModelParams:
    return ModelParams(
        alpha=0.0,
        gamma=1.0,
        theta=0.2,
        F=CdfSpec.uniform(1.2),
        sigma=SigmaSpec.assumption1(1.0),
    )


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)

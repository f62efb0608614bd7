import numpy as np
import pytest
from hypothesis import settings as hypothesis_settings

from app.schemas.adr import AdrParams, ConstantVelocity

SEED = 20240101

hypothesis_settings.register_profile("carleman", max_examples=30, deadline=None)
hypothesis_settings.load_profile("carleman")


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


@pytest.fixture
def default_params():
    """标准设置：N=20，Δx=D=1，Δt=0.01，a=1，b=0.6，U=1"""
    return AdrParams()


@pytest.fixture
def small_params():
    return AdrParams(diffusion=0.7, a=1.3, b=0.4, velocity=ConstantVelocity(value=0.9), dx=0.8, dt=0.01, n_sites=5)

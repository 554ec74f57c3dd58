import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cslidar.chirp import ChirpConfig, preset
from cslidar.scene import (CollectionGeometry, gaussian_illumination,
                           make_demo_scene, returns_from_scene)

settings.register_profile(
    "ci", deadline=None, max_examples=25,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")


@pytest.fixture(scope="session")
def desk_cfg():
    return preset("desk32")


@pytest.fixture(scope="session")
def tiny_cfg():
    # 0.5 m resolution cells, 32 m range, 128 samples: every demo depth sits
    # exactly on a bin, so spectra are leakage free
    return ChirpConfig(delta_nu=2.998e8, period=1e-3, sample_rate=128e3)


@pytest.fixture(scope="session")
def geometry():
    return CollectionGeometry()


@pytest.fixture(scope="session")
def demo16(tiny_cfg, geometry):
    scene = make_demo_scene(16, 16)
    illum = gaussian_illumination(16, 16)
    field = returns_from_scene(scene, illum, geometry, tiny_cfg)
    return scene, field


@pytest.fixture(scope="session")
def demo32(desk_cfg, geometry):
    scene = make_demo_scene(32, 32)
    illum = gaussian_illumination(32, 32)
    field = returns_from_scene(scene, illum, geometry, desk_cfg)
    return scene, field

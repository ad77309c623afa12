import numpy as np
import pytest

from liftguard import data_path
from liftguard.geometry import (
    CalibrationBundle,
    Intrinsics,
    RigidTransform,
    load_calibration,
)
from liftguard.synth import default_calibration


@pytest.fixture(scope="session")
def d455_calib():
    return load_calibration(data_path("d455_mid360.yaml"))


@pytest.fixture(scope="session")
def hikrobot_calib():
    return load_calibration(data_path("hikrobot_avia.yaml"))


@pytest.fixture(scope="session")
def synth_calib():
    return default_calibration()


@pytest.fixture
def plain_calib():
    """Identity extrinsics, small image, easy numbers."""
    return CalibrationBundle(
        intrinsics=Intrinsics(100.0, 100.0, 32.0, 24.0),
        lidar_to_camera=RigidTransform.identity(),
        world_to_lidar=RigidTransform.identity(),
        image_width=64,
        image_height=48,
    )

"""Camera/LiDAR crane-lifting safety monitoring, replay-driven."""

from importlib import resources

__version__ = "0.1.0"


def data_path(name: str):
    """Path to a packaged data fixture (calibration files, reference runs)."""
    return resources.files("liftguard").joinpath("data", name)

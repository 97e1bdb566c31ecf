import pytest

from thetakernels.curves import build_curve


@pytest.fixture(scope="session")
def lemniscatic():
    """y^2 = x^3 - x, genus 1, square period lattice."""
    return build_curve([0, -1, 0, 1])


@pytest.fixture(scope="session")
def hexagonal():
    """y^2 = x^3 - 1, genus 1, hexagonal period lattice."""
    return build_curve([-1, 0, 0, 1])


@pytest.fixture(scope="session")
def genus2():
    """y^2 = x^5 - x, genus 2."""
    return build_curve([0, -1, 0, 0, 0, 1])

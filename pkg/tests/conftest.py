"""Test configuration and fixtures"""

import os

import pytest

# Set environment variables before any app imports
os.environ["ENV"] = "test"
os.environ.setdefault("SWEEP_WORKERS", "2")


@pytest.fixture(scope="session")
def S2():
    from app.core.padic import PlaceSet

    return PlaceSet.of(2)


@pytest.fixture(scope="session")
def S23():
    from app.core.padic import PlaceSet

    return PlaceSet.of(2, 3)


@pytest.fixture(scope="session")
def default_profile():
    from app.models.profiles import load_profile

    return load_profile("default")


@pytest.fixture(scope="session")
def spherical_f(S2, default_profile):
    """f = f_inf * 1_{K_2} with the default archimedean profile"""
    from app.models.orbital import TestFunctionSpec

    return TestFunctionSpec.spherical(S2, default_profile)


@pytest.fixture(scope="session")
def zero_f(S2):
    from app.models.orbital import TestFunctionSpec
    from app.models.profiles import load_profile

    return TestFunctionSpec.spherical(S2, load_profile("zero"))

import pytest

from lrselect import kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Pay any jit compilation once, before timed tests run."""
    kernels.warm_up()

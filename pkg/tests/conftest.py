import pytest

from liouville.covariance import CutoffSequence
from liouville.gff import GridSpec, get_sampler

# one shared cutoff sequence so every test (and the pipeline, which
# builds dyadic(8) for level-6 runs) hits the same cached Cholesky
# factors
DYADIC = CutoffSequence.dyadic(8)


@pytest.fixture(scope="session")
def dyadic():
    return DYADIC


@pytest.fixture(scope="session")
def sampler_default64():
    """64x64 working grid on [-2, 2]^2 (the pipeline default)."""
    return get_sampler(GridSpec.square(2.0, 64), DYADIC, 1.0)


@pytest.fixture(scope="session")
def sampler_probe64():
    """64x64 grid on [-3.2, 3.2]^2, covering E_3 and its successor."""
    return get_sampler(GridSpec.square(3.2, 64), DYADIC, 1.0)


@pytest.fixture(scope="session")
def sampler_small32():
    """32x32 grid on [-2, 2]^2 for ensemble-heavy statistics."""
    return get_sampler(GridSpec.square(2.0, 32), DYADIC, 1.0)


@pytest.fixture(scope="session")
def ensemble400(sampler_default64):
    """400 level-6 field draws shared by the statistical criteria."""
    return sampler_default64.field_batch(6, 4242, range(400))


@pytest.fixture(scope="session")
def field_default(sampler_default64):
    return sampler_default64.field(6, 2024, 0)


@pytest.fixture(scope="session")
def field_probe(sampler_probe64):
    return sampler_probe64.field(6, 2024, 0)

import pytest

from bnnfi import topology_from_shapes
from bnnfi.model_io import generate_model, synthetic_input


def pytest_addoption(parser):
    parser.addoption("--pretrained-model", default=None,
                     help="path to a trained model file for the accuracy check")
    parser.addoption("--mnist-images", default=None)
    parser.addoption("--mnist-labels", default=None)

# Frozen desk-scale designs used across the suite. The acceptance campaign
# constants (model seed 8, input seed 1) were chosen once for a non-degenerate
# outcome mix and are deliberately never changed.
TOY_FEATURES = [32, 16, 10]
TOY_PE = [4, 2]
TOY_SIMD = [4, 4]
ACC_MODEL_SEED = 8
ACC_INPUT_SEED = 1

TINY_FEATURES = [8, 4, 2]
TINY_PE = [2, 2]
TINY_SIMD = [2, 2]
TINY_MODEL_SEED = 11


@pytest.fixture(scope="session")
def toy_topology():
    return topology_from_shapes(TOY_FEATURES, TOY_PE, TOY_SIMD)


@pytest.fixture(scope="session")
def toy_model(toy_topology):
    return generate_model(toy_topology, ACC_MODEL_SEED)


@pytest.fixture(scope="session")
def toy_input(toy_topology):
    return synthetic_input(toy_topology, ACC_INPUT_SEED)


@pytest.fixture(scope="session")
def tiny_topology():
    return topology_from_shapes(TINY_FEATURES, TINY_PE, TINY_SIMD)


@pytest.fixture(scope="session")
def tiny_model(tiny_topology):
    return generate_model(tiny_topology, TINY_MODEL_SEED)

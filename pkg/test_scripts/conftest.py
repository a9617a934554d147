"""
conftest.py

Shared pytest setup for the FAITH suite.  Log and data directories are redirected before any
FAITH module is imported, since the loggers open their files at import time.
"""

import os
import random
import sys
import tempfile

_SCRATCH = tempfile.mkdtemp(prefix="faith-tests-")
os.environ.setdefault("FAITH_LOG_DIR", os.path.join(_SCRATCH, "logs"))
os.environ.setdefault("FAITH_DATA_DIR", os.path.join(_SCRATCH, "data"))

_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(_ROOT, "config"))
sys.path.insert(0, os.path.join(_ROOT, "src"))

# pylint: disable=wrong-import-position
import pytest

import faith_config
import faith_pairing_core
import faith_protocol

faith_config.ENABLE_TEST_HOOKS = True

# Toy modulus for protocol tests: large enough that a forged sigma proof is practically never accepted.
PROTOCOL_CURVE = "toy-65521"
PROTOCOL_CONFIG = {"curve": PROTOCOL_CURVE, "chunk_size": 4096, "hash_alg": "sha256"}


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: large-size or many-trial test, run with FAITH_SLOW_TESTS=1")


def pytest_collection_modifyitems(config, items):
    if os.environ.get("FAITH_SLOW_TESTS") == "1":
        return
    skip_slow = pytest.mark.skip(reason="set FAITH_SLOW_TESTS=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def toy_ctx():
    return faith_pairing_core.toy_oracle_ctx(101)


@pytest.fixture
def wide_toy_ctx():
    return faith_pairing_core.toy_oracle_ctx(65521)


@pytest.fixture(scope="session")
def bls_ctx():
    return faith_pairing_core.bls12_381_ctx()


@pytest.fixture(scope="session")
def native_ctx():
    pytest.importorskip("charm.toolbox.pairinggroup")
    return faith_pairing_core.bn254_ctx()


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture(scope="session")
def toy_params():
    return faith_protocol.ta_setup(PROTOCOL_CONFIG)


@pytest.fixture
def make_system(tmp_path, toy_params):
    """
    Factory for a fresh in-process deployment under tmp_path with the given SP behaviour.
    """
    def factory(behaviour="honest", seed=7, name="data"):
        return faith_protocol.FaithSystem.create(
            str(tmp_path / name), toy_params, behaviour=behaviour, processes=1, rng=random.Random(seed),
        )
    return factory


@pytest.fixture
def system(make_system):
    return make_system()


@pytest.fixture
def write_file(tmp_path):
    """
    Write `size` seeded random bytes and return (path, data).
    """
    def factory(name, size, seed=0):
        data = random.Random(seed).randbytes(size)
        path = tmp_path / name
        path.write_bytes(data)
        return str(path), data
    return factory

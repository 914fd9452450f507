import os

import numpy as np
import pytest

from pskip.problems import make_logistic, parse_libsvm, partition
from pskip.topology import metropolis, ring

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")
FIXTURE_PATH = os.path.join(DATA_DIR, "synthetic.libsvm")


@pytest.fixture(scope="session")
def fixture_path():
    return FIXTURE_PATH


@pytest.fixture(scope="session")
def fixture_dataset():
    with open(FIXTURE_PATH) as fh:
        return parse_libsvm(fh)


@pytest.fixture(scope="session")
def ring10():
    return metropolis(ring(10))


def logistic_from(ds, n, regularizer, sigma2, seed=4):
    dense = ds.to_dense()
    shards = [(dense[ix], ds.labels[ix].astype(np.float64))
              for ix in partition(ds, n, seed)]
    return make_logistic(shards, regularizer, sigma2)

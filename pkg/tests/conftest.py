import numpy as np
import pytest

from aodet import Dtmc, MdpModel, TruncationConfig

PAPER_MATRIX = [[0.98, 0.02], [0.01, 0.99]]


@pytest.fixture
def paper_dtmc():
    return Dtmc(PAPER_MATRIX, max_power=40)


@pytest.fixture
def paper_model(paper_dtmc):
    return MdpModel(paper_dtmc, q=0.8, trunc=TruncationConfig(20, 20))


@pytest.fixture
def tiny_model():
    # 12 states: small enough for exhaustive policy enumeration
    return MdpModel(Dtmc(PAPER_MATRIX), q=0.8, trunc=TruncationConfig(1, 2))


def random_ergodic_matrix(rng: np.random.Generator, n: int) -> np.ndarray:
    """Strictly positive rows, hence ergodic."""
    P = rng.random((n, n)) + 0.05
    return P / P.sum(axis=1, keepdims=True)

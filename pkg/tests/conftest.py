import numpy as np
import pytest

from ttvlasov import TTTensor


def random_tt(rng, mode_sizes, rank):
    """Random TT tensor with the given uniform interior rank."""
    d = len(mode_sizes)
    ranks = [1] + [rank] * (d - 1) + [1]
    kernels = [
        rng.standard_normal((ranks[k], mode_sizes[k], ranks[k + 1]))
        for k in range(d)
    ]
    return TTTensor(kernels)


def dense_outer(factors):
    """Dense outer product of 1D vectors, the rank-1 oracle."""
    out = np.asarray(factors[0], dtype=float)
    for f in factors[1:]:
        out = np.multiply.outer(out, np.asarray(f, dtype=float))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20260816)

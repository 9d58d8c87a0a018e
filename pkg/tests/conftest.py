import numpy as np
import pytest

from gipan.sampling import BlockMeanDown, ExplicitOperator, ReplicateUp


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_rank(rng, m, n, rank):
    """Random ``m x n`` matrix of exactly the given rank."""
    if rank == 0:
        return np.zeros((m, n))
    return rng.standard_normal((m, rank)) @ rng.standard_normal((rank, n))


def desk_instance(rng, h=3, w=2, r=2, S=4):
    """Random pan/ms matrices plus block-mean and replicate operators."""
    H, W = h * r, w * r
    Y = rng.uniform(0, 100, size=(H * W, 1))
    Z = rng.uniform(0, 100, size=(h * w, S))
    B = BlockMeanDown((H, W), r)
    V = ReplicateUp((h, w), r)
    return Y, Z, B, V


def random_explicit(rng, in_shape, out_shape):
    n_in = in_shape[0] * in_shape[1]
    n_out = out_shape[0] * out_shape[1]
    return ExplicitOperator(rng.standard_normal((n_out, n_in)), in_shape, out_shape)

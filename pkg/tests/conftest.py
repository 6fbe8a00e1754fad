"""Shared fixtures."""

import numpy as np
import pytest

from ptnn import gen_lowrank, gen_mask, write_tensor


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def randn(rng):
    """randn(*dims) -> standard normal tensor from the test generator."""

    def make(*dims):
        return rng.standard_normal(dims)

    return make


@pytest.fixture
def lowrank_instance():
    """Small tubal-rank-2 tensor with a half-observed mask."""
    truth = gen_lowrank((10, 10, 4), 2, seed=3)
    mask = gen_mask(truth.shape, 0.5, seed=3)
    return truth, mask


@pytest.fixture
def tensor_file(tmp_path):
    """Write a small low-rank tensor to disk and return its path."""
    path = tmp_path / "truth.tns"
    write_tensor(path, gen_lowrank((6, 6, 3), 2, seed=11))
    return path

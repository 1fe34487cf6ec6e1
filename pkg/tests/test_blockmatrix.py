import numpy as np
import pytest

from corrbound import BlockMatrix
from corrbound.errors import InvariantViolationError


def test_out_of_range_reads_are_zero():
    bm = BlockMatrix.zeros(2, 3, 2)
    bm.set_block(1, 1, np.ones((2, 2)))
    zero = np.zeros((2, 2))
    for i, j in [(0, 1), (1, 0), (-1, 2), (3, 1), (1, 4), (0, 0), (5, 5)]:
        assert np.array_equal(bm.block(i, j), zero)
    assert np.array_equal(bm[1, 1], np.ones((2, 2)))


def test_set_get_roundtrip_and_dense():
    rng = np.random.default_rng(0)
    bm = BlockMatrix.zeros(2, 2, 3)
    blocks = {}
    for i in (1, 2):
        for j in (1, 2):
            blk = rng.normal(size=(3, 3))
            blocks[i, j] = blk
            bm[i, j] = blk
    for (i, j), blk in blocks.items():
        assert np.array_equal(bm[i, j], blk)
    dense = bm.dense()
    assert np.array_equal(dense[:3, 3:], blocks[1, 2])
    again = BlockMatrix.from_dense(dense, 3)
    assert np.array_equal(again.dense(), dense)


def test_out_of_range_write_rejected():
    bm = BlockMatrix.zeros(1, 1, 2)
    with pytest.raises(IndexError):
        bm.set_block(2, 1, np.zeros((2, 2)))
    with pytest.raises(ValueError):
        bm.set_block(1, 1, np.zeros((3, 3)))


def test_blockwise_transpose_and_symmetry():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(4, 4))
    sym = a + a.T
    bm = BlockMatrix.from_dense(sym, 2)
    assert bm.is_block_symmetric()
    assert np.array_equal(bm.blockwise_transpose().block(1, 2), bm.block(2, 1).T)
    bm.set_block(1, 2, np.ones((2, 2)))
    assert not bm.is_block_symmetric()
    assert bm.symmetrized().is_block_symmetric()


def test_non_finite_detected():
    bm = BlockMatrix.zeros(1, 1, 2)
    bm.set_block(1, 1, np.array([[1.0, np.nan], [0.0, 1.0]]))
    with pytest.raises(InvariantViolationError):
        bm.require_finite()


def test_shape_validation():
    with pytest.raises(ValueError):
        BlockMatrix(0, 1, 2)
    with pytest.raises(ValueError):
        BlockMatrix(2, 2, 2, data=np.zeros((3, 4)))
    with pytest.raises(ValueError):
        BlockMatrix.from_dense(np.zeros((5, 4)), 2)

"""Dense matrices organized as grids of same-sized square blocks.

Block indices are 1-based, matching the usual partitioned-matrix notation.
Reading any index outside the stored grid returns the zero block; this
convention lets assembly formulas be written without boundary special cases.
"""

from __future__ import annotations

import numpy as np

from .errors import InvariantViolationError


class BlockMatrix:
    """A ``rows x cols`` grid of dense ``block_dim x block_dim`` real blocks."""

    __slots__ = ("rows", "cols", "block_dim", "_data")

    def __init__(self, rows: int, cols: int, block_dim: int, data: np.ndarray | None = None):
        if rows < 1 or cols < 1 or block_dim < 1:
            raise ValueError("rows, cols and block_dim must be positive")
        self.rows = rows
        self.cols = cols
        self.block_dim = block_dim
        if data is None:
            data = np.zeros((rows * block_dim, cols * block_dim))
        else:
            data = np.array(data, dtype=float)
            if data.shape != (rows * block_dim, cols * block_dim):
                raise ValueError(
                    f"dense data shape {data.shape} does not match "
                    f"{rows}x{cols} blocks of size {block_dim}"
                )
        self._data = data

    # -- construction helpers ------------------------------------------------

    @classmethod
    def from_dense(cls, dense: np.ndarray, block_dim: int) -> "BlockMatrix":
        dense = np.asarray(dense, dtype=float)
        nr, nc = dense.shape
        if nr % block_dim or nc % block_dim:
            raise ValueError("dense shape is not a multiple of block_dim")
        return cls(nr // block_dim, nc // block_dim, block_dim, dense)

    @classmethod
    def zeros(cls, rows: int, cols: int, block_dim: int) -> "BlockMatrix":
        return cls(rows, cols, block_dim)

    # -- indexing ------------------------------------------------------------

    def _in_range(self, i: int, j: int) -> bool:
        return 1 <= i <= self.rows and 1 <= j <= self.cols

    def block(self, i: int, j: int) -> np.ndarray:
        """Block ``(i, j)`` (1-based); the zero block when out of range."""
        if not self._in_range(i, j):
            return np.zeros((self.block_dim, self.block_dim))
        d = self.block_dim
        return self._data[(i - 1) * d : i * d, (j - 1) * d : j * d].copy()

    def __getitem__(self, key: tuple[int, int]) -> np.ndarray:
        return self.block(*key)

    def set_block(self, i: int, j: int, value: np.ndarray) -> None:
        if not self._in_range(i, j):
            raise IndexError(f"block ({i}, {j}) outside a {self.rows}x{self.cols} grid")
        d = self.block_dim
        value = np.asarray(value, dtype=float)
        if value.shape != (d, d):
            raise ValueError(f"block must be {d}x{d}, got {value.shape}")
        self._data[(i - 1) * d : i * d, (j - 1) * d : j * d] = value

    def __setitem__(self, key: tuple[int, int], value: np.ndarray) -> None:
        self.set_block(*key, value)

    def add_block(self, i: int, j: int, value: np.ndarray) -> None:
        self.set_block(i, j, self.block(i, j) + np.asarray(value, dtype=float))

    # -- whole-matrix views ----------------------------------------------------

    def dense(self) -> np.ndarray:
        return self._data.copy()

    def blockwise_transpose(self) -> "BlockMatrix":
        return BlockMatrix.from_dense(self._data.T, self.block_dim)

    def copy(self) -> "BlockMatrix":
        return BlockMatrix(self.rows, self.cols, self.block_dim, self._data.copy())

    # -- validation --------------------------------------------------------------

    def require_finite(self, context: str = "block matrix") -> None:
        if not np.all(np.isfinite(self._data)):
            raise InvariantViolationError(f"{context} contains non-finite entries")

    def is_block_symmetric(self, tol: float = 0.0) -> bool:
        if self.rows != self.cols:
            return False
        scale = max(float(np.max(np.abs(self._data))), 1.0)
        return bool(np.max(np.abs(self._data - self._data.T)) <= tol * scale)

    def symmetrized(self) -> "BlockMatrix":
        return BlockMatrix.from_dense(0.5 * (self._data + self._data.T), self.block_dim)

    def __repr__(self) -> str:
        return (
            f"BlockMatrix(rows={self.rows}, cols={self.cols}, "
            f"block_dim={self.block_dim})"
        )

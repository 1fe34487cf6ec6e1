"""Brute-force reference: full-horizon joint information and direct reduction.

The joint information matrix over all states up to a horizon is assembled
factor by factor from the same conditional-density factorization the
recursion uses; the information submatrix for the last state then falls out
of a single Schur complement.  Agreement with the recursion is the package's
primary correctness check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blocks import BlockProvider, ExpectationEstimator
from .blockmatrix import BlockMatrix
from .errors import InvariantViolationError
from .linalg import (
    check_psd,
    schur_complement_keep_last,
    symmetrize,
)
from .models import SystemModel

# Building the joint costs O((k r)^3); past this horizon the recursion is the
# only sensible tool and agreement at small horizons already pins the algebra.
MAX_ORACLE_HORIZON = 24


@dataclass
class JointInformation:
    """Joint information matrix over states ``x[0] .. x[horizon]``."""

    horizon: int
    block_dim: int
    matrix: np.ndarray

    def state_block(self, i: int, j: int) -> np.ndarray:
        r = self.block_dim
        return self.matrix[i * r : (i + 1) * r, j * r : (j + 1) * r].copy()

    def history_partition(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Split into (everything before the last state, couplings, last state)."""
        r = self.block_dim
        cut = self.matrix.shape[0] - r
        m = self.matrix
        return m[:cut, :cut], m[:cut, cut:], m[cut:, :cut], m[cut:, cut:]

    def validate(self) -> None:
        m = self.matrix
        if not np.allclose(m, m.T, rtol=0.0, atol=1e-9 * max(1.0, float(np.abs(m).max()))):
            raise InvariantViolationError("joint information matrix is not symmetric")
        check_psd(m, rel_tol=1e-9, context="joint information matrix")


def prior_window_information(model: SystemModel) -> np.ndarray:
    """Joint information of the prior window alone (no dynamics factors)."""
    return model.prior.information()


def _place(matrix: np.ndarray, grid: BlockMatrix, states: list[int]) -> None:
    r = grid.block_dim
    for a, si in enumerate(states, start=1):
        for b, sj in enumerate(states, start=1):
            matrix[si * r : (si + 1) * r, sj * r : (sj + 1) * r] += grid.block(a, b)


def factor_state_indices(model: SystemModel, k: int) -> tuple[list[int], list[int]]:
    """State indices covered by the transition and measurement factors at time ``k``."""
    p = model.profile
    trans = list(range(k - p.l2_eff + 1, k + 2))
    meas = list(range(k - p.l3_eff + 2, k + 2))
    return trans, meas


def build_joint(model: SystemModel, est: ExpectationEstimator, k: int,
                provider: BlockProvider | None = None) -> JointInformation:
    """Joint information over ``x[0] .. x[k]`` under the factorized density."""
    start = model.start_time
    if k < start:
        raise ValueError(f"horizon {k} precedes the prior window end {start}")
    if k > MAX_ORACLE_HORIZON:
        raise ValueError(
            f"horizon {k} exceeds the brute-force cap {MAX_ORACLE_HORIZON}"
        )
    r = model.state_dim
    if provider is None and k > start:
        provider = BlockProvider(model, est, start, k)
    matrix = np.zeros(((k + 1) * r, (k + 1) * r))
    w = model.prior.window_len
    matrix[: w * r, : w * r] = prior_window_information(model)
    for t in range(start, k):
        b, c = provider.blocks(t)
        trans_states, meas_states = factor_state_indices(model, t)
        _place(matrix, b, trans_states)
        _place(matrix, c, meas_states)
    joint = JointInformation(horizon=k, block_dim=r, matrix=symmetrize(matrix))
    joint.validate()
    return joint


def schur_submatrix(joint: JointInformation) -> np.ndarray:
    """Information submatrix for the final state of the joint."""
    if joint.matrix.shape[0] == joint.block_dim:
        return joint.matrix.copy()
    return schur_complement_keep_last(joint.matrix, joint.block_dim,
                                      context="joint information")


def information_sequence(model: SystemModel, est: ExpectationEstimator, k_max: int,
                         provider: BlockProvider | None = None) -> dict[int, np.ndarray]:
    """Oracle information submatrices for every time from the window end to ``k_max``.

    Builds incrementally: the submatrix at time ``t`` uses the factors up to
    ``t - 1``, which is exactly the leading part of the matrix for later
    times.
    """
    start = model.start_time
    if k_max < start:
        raise ValueError(f"horizon {k_max} precedes the prior window end {start}")
    if k_max > MAX_ORACLE_HORIZON:
        raise ValueError(
            f"horizon {k_max} exceeds the brute-force cap {MAX_ORACLE_HORIZON}"
        )
    r = model.state_dim
    if provider is None and k_max > start:
        provider = BlockProvider(model, est, start, k_max)
    matrix = np.zeros(((k_max + 1) * r, (k_max + 1) * r))
    w = model.prior.window_len
    matrix[: w * r, : w * r] = prior_window_information(model)
    out: dict[int, np.ndarray] = {}
    for t in range(start, k_max + 1):
        lead = (t + 1) * r
        out[t] = schur_complement_keep_last(symmetrize(matrix[:lead, :lead]), r,
                                            context="joint information")
        if t < k_max:
            b, c = provider.blocks(t)
            trans_states, meas_states = factor_state_indices(model, t)
            _place(matrix, b, trans_states)
            _place(matrix, c, meas_states)
    return out


# ---------------------------------------------------------------------------
# Partitioned-inverse utilities
# ---------------------------------------------------------------------------


def partitioned_inverse(a: np.ndarray, split: int) -> np.ndarray:
    """Inverse of a partitioned matrix reconstructed from its leading block
    and the Schur complement, as a product of triangular and block-diagonal
    factors."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    a11 = a[:split, :split]
    a12 = a[:split, split:]
    a21 = a[split:, :split]
    a22 = a[split:, split:]
    a11_inv = np.linalg.inv(a11)
    delta = a22 - a21 @ a11_inv @ a12
    delta_inv = np.linalg.inv(delta)

    upper = np.eye(n)
    upper[:split, split:] = -a11_inv @ a12
    middle = np.zeros((n, n))
    middle[:split, :split] = a11_inv
    middle[split:, split:] = delta_inv
    lower = np.eye(n)
    lower[split:, :split] = -a21 @ a11_inv
    return upper @ middle @ lower


def contract_through_inverse(b_row: np.ndarray, a: np.ndarray, c_col: np.ndarray,
                             split: int) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate ``B A^{-1} C`` directly and through the partitioned identity.

    Returns both values; they agree whenever ``A`` and its leading block are
    invertible, which property tests exercise.
    """
    b_row = np.atleast_2d(np.asarray(b_row, dtype=float))
    c_col = np.asarray(c_col, dtype=float)
    if c_col.ndim == 1:
        c_col = c_col[:, None]
    a = np.asarray(a, dtype=float)

    direct = b_row @ np.linalg.solve(a, c_col)

    b1 = b_row[:, :split]
    b2 = b_row[:, split:]
    c1 = c_col[:split, :]
    c2 = c_col[split:, :]
    a11 = a[:split, :split]
    a12 = a[:split, split:]
    a21 = a[split:, :split]
    a22 = a[split:, split:]
    a11_inv = np.linalg.inv(a11)
    delta = a22 - a21 @ a11_inv @ a12
    factored = b1 @ a11_inv @ c1 + (b2 - b1 @ a11_inv @ a12) @ np.linalg.solve(
        delta, c2 - a21 @ a11_inv @ c1
    )
    return direct, factored


# ---------------------------------------------------------------------------
# Recursion-vs-oracle comparison
# ---------------------------------------------------------------------------


def max_relative_deviation(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1e-300)
    return float(np.max(np.abs(a - b)) / scale)


def verify_recursion(model: SystemModel, est: ExpectationEstimator, k_max: int
                     ) -> dict[int, float]:
    """Per-time maximum relative deviation between recursion and oracle.

    Both sides consume the same block provider, so the check isolates the
    assembly and marginalization algebra from Monte-Carlo noise.
    """
    from . import recursion

    start = model.start_time
    if k_max <= start:
        raise ValueError("k_max must exceed the prior window end")
    provider = BlockProvider(model, est, start, k_max)
    oracle_seq = information_sequence(model, est, k_max, provider=provider)
    trace = recursion.run(model, est, k_max - start, provider=provider)
    deviations: dict[int, float] = {}
    for entry in trace.entries:
        deviations[entry.time_index] = max_relative_deviation(
            entry.info, oracle_seq[entry.time_index]
        )
    return deviations

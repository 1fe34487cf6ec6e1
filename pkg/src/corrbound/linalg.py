"""Small dense linear-algebra helpers with symmetric-PSD safety rails."""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import InvariantViolationError, SingularMatrixError

# Below this reciprocal condition number a solve is treated as singular
# rather than silently pseudo-inverted.
RCOND_FLOOR = 1e-13


def symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def reciprocal_condition(a: np.ndarray) -> float:
    if a.size == 0:
        return 1.0
    c = np.linalg.cond(a)
    if not np.isfinite(c) or c == 0.0:
        return 0.0
    return 1.0 / c


def psd_solve(a: np.ndarray, b: np.ndarray, *, context: str = "matrix") -> np.ndarray:
    """Solve ``a @ x = b`` for symmetric positive-definite ``a``.

    Raises SingularMatrixError with a condition estimate instead of returning
    a pseudo-inverse when ``a`` is singular or nearly so.
    """
    a = symmetrize(np.asarray(a, dtype=float))
    if not np.all(np.isfinite(a)):
        raise SingularMatrixError(f"{context} contains non-finite entries")
    rcond = reciprocal_condition(a)
    if rcond < RCOND_FLOOR:
        raise SingularMatrixError(f"{context} is numerically singular", rcond=rcond)
    try:
        factor = scipy.linalg.cho_factor(a, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise SingularMatrixError(
            f"{context} is not positive definite: {exc}", rcond=rcond
        ) from exc
    return scipy.linalg.cho_solve(factor, np.asarray(b, dtype=float), check_finite=False)


def psd_inverse(a: np.ndarray, *, context: str = "matrix") -> np.ndarray:
    eye = np.eye(a.shape[0])
    return symmetrize(psd_solve(a, eye, context=context))


def check_psd(a: np.ndarray, *, rel_tol: float = 1e-10, context: str = "matrix") -> None:
    """Raise unless ``a`` is PSD up to ``-rel_tol * max_eigenvalue``."""
    eigs = np.linalg.eigvalsh(symmetrize(a))
    scale = max(float(eigs[-1]), 0.0)
    floor = -rel_tol * max(scale, 1.0)
    if eigs[0] < floor:
        raise InvariantViolationError(
            f"{context} lost positive semidefiniteness "
            f"(min eigenvalue {eigs[0]:.3e}, max {eigs[-1]:.3e})"
        )


def is_psd(a: np.ndarray, rel_tol: float = 1e-10) -> bool:
    eigs = np.linalg.eigvalsh(symmetrize(a))
    scale = max(float(eigs[-1]), 0.0)
    return bool(eigs[0] >= -rel_tol * max(scale, 1.0))


def psd_dominates(a: np.ndarray, b: np.ndarray, tol: float = 1e-10) -> bool:
    """True when ``a - b`` is PSD up to an absolute eigenvalue tolerance."""
    diff = symmetrize(a) - symmetrize(b)
    eigs = np.linalg.eigvalsh(symmetrize(diff))
    scale = max(abs(float(eigs[-1])), 1.0)
    return bool(eigs[0] >= -tol * scale)


def schur_complement_remove_first(m: np.ndarray, drop: int, *, context: str = "joint") -> np.ndarray:
    """Schur complement of the leading ``drop x drop`` block of ``m``."""
    m = np.asarray(m, dtype=float)
    if drop == 0:
        return m.copy()
    a11 = m[:drop, :drop]
    a12 = m[:drop, drop:]
    a21 = m[drop:, :drop]
    a22 = m[drop:, drop:]
    return symmetrize(a22 - a21 @ psd_solve(a11, a12, context=f"{context} leading block"))


def schur_complement_keep_last(m: np.ndarray, keep: int, *, context: str = "joint") -> np.ndarray:
    return schur_complement_remove_first(m, m.shape[0] - keep, context=context)


def finite_difference_hessian(f, x: np.ndarray, base_step: float = 1e-4) -> np.ndarray:
    """Central-difference Hessian of scalar ``f`` at ``x``.

    Step along coordinate ``i`` is ``base_step * (1 + |x_i|)``.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    h = base_step * (1.0 + np.abs(x))
    hess = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h[i]
            ej[j] = h[j]
            if i == j:
                value = (f(x + ei) - 2.0 * f(x) + f(x - ei)) / (h[i] * h[i])
            else:
                value = (
                    f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
                ) / (4.0 * h[i] * h[j])
            hess[i, j] = value
            hess[j, i] = value
    return hess

import numpy as np
import pytest

from corrbound.errors import InvariantViolationError, SingularMatrixError
from corrbound import linalg


def test_psd_solve_matches_direct_solve():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = rng.integers(1, 8)
        a = rng.normal(size=(n, n))
        spd = a @ a.T + 0.5 * np.eye(n)
        b = rng.normal(size=(n, 3))
        x = linalg.psd_solve(spd, b)
        assert np.allclose(spd @ x, b, atol=1e-9)


def test_psd_solve_reports_condition_on_singular():
    singular = np.array([[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(SingularMatrixError) as exc:
        linalg.psd_solve(singular, np.eye(2))
    assert exc.value.rcond is not None
    assert exc.value.rcond < 1e-13


def test_psd_solve_rejects_indefinite():
    with pytest.raises(SingularMatrixError):
        linalg.psd_solve(np.diag([1.0, -1.0]), np.eye(2))


def test_check_psd():
    linalg.check_psd(np.diag([1.0, 0.0]))
    with pytest.raises(InvariantViolationError):
        linalg.check_psd(np.diag([1.0, -1e-3]))
    # Tiny negative eigenvalues within tolerance are accepted.
    linalg.check_psd(np.diag([1.0, -1e-12]))


def test_schur_complements():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(5, 5))
    spd = a @ a.T + np.eye(5)
    keep = linalg.schur_complement_keep_last(spd, 2)
    a11 = spd[:3, :3]
    expected = spd[3:, 3:] - spd[3:, :3] @ np.linalg.solve(a11, spd[:3, 3:])
    assert np.allclose(keep, expected, atol=1e-12)
    # Dropping zero rows is the identity.
    assert np.allclose(linalg.schur_complement_remove_first(spd, 0), spd)
    # Inverse consistency: the kept block of the inverse is the inverse of
    # the complement.
    inv_block = np.linalg.inv(spd)[3:, 3:]
    assert np.allclose(np.linalg.inv(keep), inv_block, atol=1e-10)


def test_psd_dominates():
    assert linalg.psd_dominates(np.diag([2.0, 2.0]), np.eye(2))
    assert not linalg.psd_dominates(np.eye(2), np.diag([2.0, 0.5]))


def test_finite_difference_hessian_quadratic_exact():
    rng = np.random.default_rng(2)
    h = rng.normal(size=(4, 4))
    h = h + h.T
    g = rng.normal(size=4)

    def f(x):
        return 0.5 * x @ h @ x + g @ x + 3.0

    x0 = rng.normal(size=4)
    fd = linalg.finite_difference_hessian(f, x0)
    assert np.allclose(fd, h, atol=1e-7)

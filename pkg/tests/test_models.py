import numpy as np
import pytest

import corrbound as cb
from corrbound.errors import ConfigError, ModelBuildError
from corrbound.linalg import finite_difference_hessian
from corrbound.blocks import transition_blocks, measurement_blocks
from conftest import random_linear_model


def test_prior_validation():
    with pytest.raises(ModelBuildError):
        cb.GaussianPrior(means=np.zeros(3), covariances=np.zeros((3, 1, 1)))
    with pytest.raises(ModelBuildError):
        cb.GaussianPrior(means=np.zeros((2, 2)), covariances=np.zeros((2, 3, 3)))


def test_prior_information_block_diagonal():
    prior = cb.GaussianPrior(
        means=np.zeros((2, 1)),
        covariances=np.array([[[2.0]], [[4.0]]]),
    )
    info = prior.information()
    assert np.allclose(info, np.diag([0.5, 0.25]))


def test_default_prior_scales():
    prior = cb.default_prior(cb.CorrelationProfile(0, 2, 0, 0), 4)
    assert prior.window_len == 3
    assert np.allclose(prior.covariances[0], np.diag([100.0, 10.0, 100.0, 10.0]))


def test_model_window_size_enforced():
    model = cb.simple_scalar_model()
    import dataclasses
    bad_prior = cb.GaussianPrior(means=np.zeros((2, 1)), covariances=np.ones((2, 1, 1)))
    with pytest.raises(ModelBuildError):
        dataclasses.replace(model, prior=bad_prior)


def test_sampler_dimensions():
    for profile, seed in [((0, 0, 0, 0), 1), ((1, 1, 2, 1), 2), ((0, 2, 0, 0), 3)]:
        model = random_linear_model(cb.CorrelationProfile(*profile), 3, 2, seed)
        batch = model.simulate(7, 11, np.random.default_rng(0))
        assert batch.states.shape == (11, 8, 3)
        assert batch.measurements.shape == (11, 8, 2)
        assert np.all(np.isfinite(batch.states))
        assert np.all(np.isfinite(batch.measurements))


def test_sampler_deterministic_given_seed(example2):
    a = example2.simulate(5, 16, np.random.default_rng(42))
    b = example2.simulate(5, 16, np.random.default_rng(42))
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(a.measurements, b.measurements)


def _fd_block_check(model, grid_ref, point_hessian_args, tol):
    stacked0, f = point_hessian_args
    fd = -finite_difference_hessian(f, stacked0)
    ref = grid_ref.dense()
    return np.max(np.abs(fd - ref)) / np.max(np.abs(ref)) < tol


def test_fd_matches_analytic_transition_example1(example1):
    est = cb.ExpectationEstimator()
    ref = transition_blocks(example1, 2, est).dense()
    batch = example1.simulate(8, 10, np.random.default_rng(0))
    k = 3
    for s in range(10):
        z_hist = batch.measurements[s, k][None, :]
        shift = batch.trans_shift[s, k]

        def f(stk):
            return example1.trans_logpdf(stk[2:4], stk[0:2][None, :], z_hist, shift)

        stk0 = np.concatenate([batch.states[s, k], batch.states[s, k + 1]])
        fd = -finite_difference_hessian(f, stk0)
        assert np.max(np.abs(fd - ref)) / np.max(np.abs(ref)) < 1e-5


def test_fd_matches_analytic_measurement_example1(example1):
    est = cb.ExpectationEstimator()
    ref = measurement_blocks(example1, 2, est).dense()
    batch = example1.simulate(8, 10, np.random.default_rng(1))
    k = 3
    for s in range(10):
        z_next = batch.measurements[s, k + 1]
        z_hist = batch.measurements[s, k][None, :]
        shift = batch.meas_shift[s, k]

        def f(stk):
            return example1.meas_logpdf(z_next, stk.reshape(2, 2)[::-1], z_hist, shift)

        stk0 = np.concatenate([batch.states[s, k], batch.states[s, k + 1]])
        fd = -finite_difference_hessian(f, stk0)
        assert np.max(np.abs(fd - ref)) / np.max(np.abs(ref)) < 1e-5


def test_fd_matches_analytic_transition_planar_cv():
    # Moderate coordinate scale: at the default 1e4-meter geometry the
    # spec'd relative step drives the central differences to their float64
    # cancellation floor (~1e-4), so the tight agreement is checked here
    # and only a loose sanity bound at the default scale below.
    profile = cb.CorrelationProfile(0, 2, 0, 0)
    from corrbound.examples import planar_cv_matrices
    f_mat, _ = planar_cv_matrices()
    prior = cb.default_prior(profile, 4, mean=np.array([100.0, 5.0, 80.0, 4.0]),
                             transition=f_mat)
    model = cb.build_example2(prior=prior)
    est = cb.ExpectationEstimator()
    ref = transition_blocks(model, 2, est).dense()
    batch = model.simulate(8, 10, np.random.default_rng(2))
    k = 3
    for s in range(10):
        shift = batch.trans_shift[s, k]

        def f(stk):
            return model.trans_logpdf(stk[8:12], stk[:8].reshape(2, 4)[::-1],
                                      np.zeros((0, 2)), shift)

        stk0 = np.concatenate([batch.states[s, k - 1], batch.states[s, k],
                               batch.states[s, k + 1]])
        fd = -finite_difference_hessian(f, stk0)
        assert np.max(np.abs(fd - ref)) / np.max(np.abs(ref)) < 1e-5


def test_fd_default_scale_sanity(example2):
    est = cb.ExpectationEstimator()
    ref = transition_blocks(example2, 2, est).dense()
    batch = example2.simulate(6, 3, np.random.default_rng(3))
    k = 3
    for s in range(3):
        shift = batch.trans_shift[s, k]

        def f(stk):
            return example2.trans_logpdf(stk[8:12], stk[:8].reshape(2, 4)[::-1],
                                         np.zeros((0, 2)), shift)

        stk0 = np.concatenate([batch.states[s, k - 1], batch.states[s, k],
                               batch.states[s, k + 1]])
        fd = -finite_difference_hessian(f, stk0)
        assert np.max(np.abs(fd - ref)) / np.max(np.abs(ref)) < 1e-3


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


def _linear_config():
    return {
        "kind": "linear_gaussian_ma",
        "state_dim": 1,
        "meas_dim": 1,
        "lags": {"l1": 0, "l2": 0, "l3": 0, "l4": 0},
        "transition_coeffs": [[[1.0]]],
        "process_cov": [[1.0]],
        "measurement_state_coeffs": [[[1.0]]],
        "measurement_cov": [[1.0]],
        "prior": {"mean": [0.0], "cov": [[1.0]]},
    }


def test_model_from_config_linear_roundtrip():
    model = cb.model_from_config(_linear_config())
    trace = cb.run(model, cb.ExpectationEstimator(), 2)
    assert abs(trace.info_at(2)[0, 0] - 1.6) < 1e-12


def test_model_from_config_rejects_unknown_fields():
    config = _linear_config()
    config["lags"]["l5"] = 1
    with pytest.raises(ConfigError, match="l5"):
        cb.model_from_config(config)
    config = _linear_config()
    config["unexpected"] = True
    with pytest.raises(ConfigError, match="unexpected"):
        cb.model_from_config(config)


def test_model_from_config_requires_fields():
    config = _linear_config()
    del config["process_cov"]
    with pytest.raises(ConfigError, match="process_cov"):
        cb.model_from_config(config)


def test_model_from_config_builtins():
    m1 = cb.model_from_config({"kind": "builtin_example1"})
    assert m1.name == "example1"
    m2 = cb.model_from_config({"kind": "builtin_example2"})
    assert m2.name == "example2"
    with pytest.raises(ConfigError):
        cb.model_from_config({"kind": "builtin_example2", "extra": 1})
    with pytest.raises(ConfigError):
        cb.model_from_config({"kind": "no_such_kind"})


def test_model_from_config_custom_factory():
    model = cb.model_from_config(
        {"kind": "custom", "factory": "corrbound.examples:simple_scalar_model"}
    )
    assert model.name == "scalar_random_walk"
    with pytest.raises(ModelBuildError):
        cb.model_from_config({"kind": "custom", "factory": "corrbound.examples:missing"})
    with pytest.raises(ConfigError):
        cb.model_from_config({"kind": "custom", "factory": "not-a-path"})


def test_replicate_sensors_validation(example1):
    assert cb.replicate_sensors(example1, 1) is example1
    doubled = cb.replicate_sensors(example1, 2)
    assert doubled.meas_dim == 4
    assert doubled.sensor_count == 2
    with pytest.raises(ModelBuildError):
        cb.replicate_sensors(example1, 0)

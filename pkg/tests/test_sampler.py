"""HMC chain mechanics: acceptance, determinism, bookkeeping, prediction."""

import numpy as np
import pytest
from scipy import stats

from kinkhmc.bnn import (MLPArchitecture, PosteriorSpec, RegressionDataset,
                         forward)
from kinkhmc.errors import DimensionMismatchError
from kinkhmc.potentials import QuadraticPotential, ZeroPotential
from kinkhmc.sampler import (HMCConfig, accept_probability, hmc_chain, mse,
                             posterior_predict)


def test_accept_probability_cases():
    assert accept_probability(0.0) == 1.0
    assert accept_probability(-3.2) == 1.0
    np.testing.assert_allclose(accept_probability(1.5), np.exp(-1.5),
                               rtol=1e-15)
    assert accept_probability(np.inf) == 0.0
    assert accept_probability(np.nan) == 0.0


def test_config_validation():
    with pytest.raises(ValueError):
        HMCConfig(step_size=0.1, n_samples=10)  # neither length given
    with pytest.raises(ValueError):
        HMCConfig(step_size=0.1, n_samples=10, n_steps=5, travel_time=1.0)
    with pytest.raises(ValueError):
        HMCConfig(step_size=-0.1, n_samples=10, n_steps=5)
    with pytest.raises(ValueError):
        HMCConfig(step_size=0.1, n_samples=0, n_steps=5)
    cfg = HMCConfig(step_size=0.25, n_samples=1, travel_time=1.0)
    assert cfg.resolved_n_steps == 4
    assert HMCConfig(step_size=10.0, n_samples=1,
                     travel_time=1.0).resolved_n_steps == 1


def test_chain_is_deterministic():
    pot = QuadraticPotential(3)
    cfg = HMCConfig(step_size=0.3, n_samples=50, n_steps=5, burn_in=10,
                    seed=123)
    a = hmc_chain(pot, cfg)
    b = hmc_chain(pot, cfg)
    np.testing.assert_array_equal(a.samples, b.samples)
    np.testing.assert_array_equal(a.delta_h, b.delta_h)
    assert a.acceptance_rate == b.acceptance_rate


def test_flat_potential_accepts_everything():
    pot = ZeroPotential(2)
    res = hmc_chain(pot, HMCConfig(step_size=0.5, n_samples=100, n_steps=3,
                                   seed=0))
    assert res.acceptance_rate == 1.0
    assert res.n_divergent == 0
    np.testing.assert_allclose(res.delta_h, 0.0, atol=1e-12)


def test_chain_samples_standard_normal():
    pot = QuadraticPotential(1)
    res = hmc_chain(pot, HMCConfig(step_size=0.5, n_samples=4000, n_steps=8,
                                   burn_in=200, seed=42))
    s = res.samples[:, 0]
    assert abs(s.mean()) < 0.05
    assert abs(s.var() - 1.0) < 0.1
    assert stats.kstest(s, "norm").statistic < 0.025
    assert res.acceptance_rate > 0.9


def test_divergent_proposals_reject_and_count():
    pot = QuadraticPotential(1, stiffness=1e8)
    init = np.array([1.0])
    res = hmc_chain(pot, HMCConfig(step_size=0.5, n_samples=20, n_steps=10,
                                   burn_in=5, seed=3), init=init)
    assert res.n_divergent == 25
    assert res.acceptance_rate == 0.0
    assert np.all(np.isinf(res.delta_h))
    # the chain never moves off its initial state
    np.testing.assert_array_equal(res.samples,
                                  np.repeat(init[None, :], 20, axis=0))


def test_rejected_proposal_repeats_previous_state():
    pot = QuadraticPotential(2)
    res = hmc_chain(pot, HMCConfig(step_size=0.9, n_samples=200, n_steps=20,
                                   seed=11))
    rej = np.nonzero(~res.accepted)[0]
    rej = rej[rej > 0]
    assert rej.size > 0
    for it in rej[:5]:
        np.testing.assert_array_equal(res.samples[it], res.samples[it - 1])


def test_init_argument():
    pot = QuadraticPotential(2)
    cfg = HMCConfig(step_size=0.4, n_samples=5, n_steps=4, seed=9)
    a = hmc_chain(pot, cfg, init=np.array([5.0, -5.0]))
    b = hmc_chain(pot, cfg, init=np.array([5.0, -5.0]))
    np.testing.assert_array_equal(a.samples, b.samples)
    with pytest.raises(DimensionMismatchError):
        hmc_chain(pot, cfg, init=np.zeros(3))


def test_summary_dict_keys():
    pot = QuadraticPotential(1)
    res = hmc_chain(pot, HMCConfig(step_size=0.5, n_samples=10, n_steps=3,
                                   seed=0))
    d = res.summary_dict()
    for key in ("n_samples", "dim", "acceptance_rate", "n_divergent",
                "mean_abs_delta_h", "max_abs_delta_h", "seed"):
        assert key in d
    assert d["n_samples"] == 10 and d["dim"] == 1


def test_posterior_predict_averages_forward_passes():
    arch = MLPArchitecture((1, 3, 1), activation="relu")
    spec = PosteriorSpec(arch=arch, data=RegressionDataset.empty(),
                         prior_scale=1.0)
    rng = np.random.default_rng(4)
    samples = rng.standard_normal((6, arch.n_params))
    x = rng.uniform(-1, 1, (5, 1))
    mean, outs = posterior_predict(spec, samples, x)
    assert outs.shape == (6, 5, 1)
    manual = np.mean([forward(arch, s, x) for s in samples], axis=0)
    np.testing.assert_allclose(mean, manual, rtol=1e-14)
    with pytest.raises(DimensionMismatchError):
        posterior_predict(spec, samples[:, :-1], x)


def test_mse():
    a = np.array([1.0, 2.0, 3.0])
    b = np.array([1.0, 0.0, 3.0])
    np.testing.assert_allclose(mse(a, b), 4.0 / 3.0, rtol=1e-15)
    with pytest.raises(DimensionMismatchError):
        mse(a, b[:2])

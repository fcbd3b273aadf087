import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from framemcmc.algebraic import AlgebraicMHSampler
from framemcmc.frames import GroupLayout, MatrixFrame, WaveletSpec, build_tiwt_frame, build_union_frame
from framemcmc.gibbs import SamplerConfigError
from framemcmc.lp_ball import lp_norm
from framemcmc.model import HyperParams, Observation, in_constraint

from _helpers import chain_draws, max_ks, naive_draws

A3 = np.array([[1.0, 0.2], [0.3, -1.0], [0.8, 0.9]])  # non-tight 3 x 2 frame


def _tiwt8():
    return build_tiwt_frame(WaveletSpec("haar", 1), (8, 8))


def test_range_component_tight_closed_form(rng):
    frame, _ = build_union_frame([WaveletSpec("haar", 1), WaveletSpec("daub4", 1, 1)], (8, 8))
    u = rng.standard_normal(64)
    xh = frame.range_component(u)
    np.testing.assert_allclose(xh, frame.analyze(u) / 2.0, atol=1e-13)
    np.testing.assert_allclose(frame.synthesize(xh), u, atol=1e-12)


@pytest.mark.parametrize("which", ["tiwt", "matrix"])
def test_null_part_synthesizes_to_zero(which, rng):
    frame = _tiwt8()[0] if which == "tiwt" else MatrixFrame(A3)
    z = rng.standard_normal(frame.K)
    assert np.linalg.norm(frame.synthesize(frame.project_nullspace(z))) < 1e-10 * np.linalg.norm(z)


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([2.0, math.inf]))
def test_candidate_synthesizes_to_u(seed, p):
    frame = MatrixFrame(A3)
    r = np.random.default_rng(seed)
    obs = Observation(r.standard_normal(2), 0.5, p)
    s = AlgebraicMHSampler(frame, GroupLayout([0, 0, 1]), obs, eta=0.2, sigma_x=0.3)
    state = s.initial_state(HyperParams([1.0, 1.0], [1.5, 1.5]))
    for _ in range(5):
        x_c, u_c, u_hat = s.propose_global(state, r)
        np.testing.assert_allclose(frame.synthesize(x_c), u_c, atol=1e-10)
        assert lp_norm(u_c - obs.y, p) <= obs.delta * (1 + 1e-12)
        assert lp_norm(u_c - u_hat, p) <= s.eta * (1 + 1e-12)
        s.step(state, r)


def test_null_move_is_projected_gaussian(rng):
    frame, lay = _tiwt8()
    obs = Observation(rng.standard_normal(64), 1e-2)
    s = AlgebraicMHSampler(frame, lay, obs, sigma_x=0.05)
    state = s.initial_state(HyperParams(np.ones(lay.G), np.full(lay.G, 1.5)))
    seed = 99
    x_c, u_c, _ = s.propose_global(state, np.random.default_rng(seed))
    # replay the draws: ball step first, then the Gaussian
    r = np.random.default_rng(seed)
    s.q_eta.sample(r)
    xi = 0.05 * r.standard_normal(frame.K)
    d = x_c - state.x
    np.testing.assert_allclose(frame.project_nullspace(d), frame.project_nullspace(xi), atol=1e-10)
    np.testing.assert_allclose(frame.synthesize(d), u_c - state.u, atol=1e-10)


def test_init_and_argument_checks(rng):
    frame, lay = _tiwt8()
    obs = Observation(np.zeros(64), 1.0)
    with pytest.raises(SamplerConfigError, match="B\\(y, delta\\)"):
        AlgebraicMHSampler(frame, lay, obs).initial_state(HyperParams(np.ones(lay.G), np.ones(lay.G)),
                                                         u0=np.full(64, 1.0))
    with pytest.raises(SamplerConfigError, match="positive"):
        AlgebraicMHSampler(frame, lay, obs).set_sigma(0.0)
    with pytest.raises(SamplerConfigError, match="layout"):
        AlgebraicMHSampler(frame, GroupLayout([0, 1]), obs)
    with pytest.raises(SamplerConfigError, match="observation"):
        AlgebraicMHSampler(frame, lay, Observation(np.zeros(63), 1.0))
    s = AlgebraicMHSampler(frame, lay, obs)
    assert s.eta == pytest.approx(0.1)
    s.initial_state(HyperParams(np.ones(lay.G), np.ones(lay.G)))
    assert s.sigma_x == 1.0  # y = 0, so the median fallback kicks in


@pytest.mark.parametrize("p", [2.0, math.inf])
def test_any_frame_stays_in_constraint(p, rng):
    frame, lay = _tiwt8()
    obs = Observation(50 + 20 * rng.standard_normal(64), 1.0, p)
    s = AlgebraicMHSampler(frame, lay, obs, sigma_x=0.02)
    state = s.initial_state(HyperParams(np.full(lay.G, 10.0), np.full(lay.G, 1.5)))
    for _ in range(300):
        s.step(state, rng)
        assert in_constraint(state.x, obs, frame, tol=1e-9)
    assert state.accepted > 0


def test_gaussian_prior_variance_for_loose_constraint(rng):
    frame = MatrixFrame(A3)
    th = HyperParams([2.0, 2.0], [2.0, 2.0])  # variance gamma / 2 = 1
    s = AlgebraicMHSampler(frame, GroupLayout([0, 0, 1]), Observation(np.zeros(2), 1e3),
                           eta=1.0, sigma_x=0.8, update_hyper=False)
    draws = chain_draws(s, th, rng, 60_000, thin=3)
    assert np.abs(draws.var(axis=0) / 1.0 - 1.0).max() < 0.05


@pytest.mark.parametrize("p", [2.0, math.inf])
def test_matches_naive_rejection_on_nontight_frame(p, rng):
    frame, lay = MatrixFrame(A3), GroupLayout([0, 0, 1])
    th = HyperParams([1.0, 1.5], [1.5, 1.2])
    obs = Observation(np.array([0.5, -0.3]), 0.5, p)
    ref = naive_draws(th, obs, frame, lay, rng, 6000)
    s = AlgebraicMHSampler(frame, lay, obs, eta=0.2, sigma_x=0.5, update_hyper=False)
    got = chain_draws(s, th, rng, 40_000, thin=5)
    assert max_ks(ref, got) < 0.05

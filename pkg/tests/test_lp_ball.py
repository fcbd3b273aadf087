import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from framemcmc.lp_ball import (BallConstraint, BallProposal, ball_density, is_uniform, log_ball_density,
                               lp_norm, project_to_ball, sample_lp_ball, sample_lp_sphere)

N = 100_000


def _draws(fn, n=N):
    return np.array([fn() for _ in range(n)])


@given(st.integers(1, 30), st.floats(0.3, 8.0), st.integers(0, 2 ** 32 - 1))
def test_sphere_draw_has_unit_norm(dim, p, seed):
    u = sample_lp_sphere(dim, p, np.random.default_rng(seed))
    assert lp_norm(u, p) == pytest.approx(1.0, abs=1e-12)


def test_sphere_marginal_uniform_for_three_dims(rng):
    u1 = _draws(lambda: sample_lp_sphere(3, 2.0, rng)[0])
    assert stats.kstest(u1, stats.uniform(loc=-1, scale=2).cdf).statistic < 0.01


def test_sphere_coordinates_centered(rng):
    u = _draws(lambda: sample_lp_sphere(4, 1.5, rng), 20_000)
    assert np.all(np.abs(u.mean(axis=0)) < 4 / math.sqrt(u.shape[0]))


def test_box_coordinates_are_uniform(rng):
    v = _draws(lambda: sample_lp_ball(4, math.inf, 30.0, rng), 20_000)
    assert np.abs(v).max() <= 30.0
    for k in range(4):
        assert stats.kstest(v[:, k], stats.uniform(loc=-30, scale=60).cdf).pvalue > 1e-4


def test_disk_second_moment(rng):
    v = _draws(lambda: sample_lp_ball(2, 2.0, 1.0, rng))
    assert np.mean(np.sum(v * v, axis=1)) == pytest.approx(0.5, abs=0.01)


def test_l1_ball_inner_mass(rng):
    v = _draws(lambda: sample_lp_ball(2, 1.0, 1.0, rng))
    assert np.mean(np.abs(v).sum(axis=1) <= 0.5) == pytest.approx(0.25, abs=0.01)


@pytest.mark.parametrize("p", [1.0, 2.0])
def test_nested_volume_fractions(p, rng):
    L, ratio = 3, 0.8
    v = _draws(lambda: sample_lp_ball(L, p, 2.0, rng))
    frac = np.mean([lp_norm(a, p) <= ratio * 2.0 for a in v])
    want = ratio ** L
    assert abs(frac - want) <= 3 * math.sqrt(want * (1 - want) / len(v))


def test_density_at_origin_three_to_one():
    assert ball_density([0.0], 2.0, 1.0) == 0.5
    assert ball_density([0.0], 2.0, 1.0, extra=2) == 0.5


def test_density_zero_outside():
    assert ball_density([0.7, 0.8], 2.0, 1.0) == 0.0
    assert log_ball_density([1.5], 1.0, 1.0) == -math.inf


def test_uniform_density_constant_inside(rng):
    vals = {round(ball_density(sample_lp_ball(3, 2.0, 1.0, rng), 2.0, 1.0), 12) for _ in range(20)}
    assert len(vals) == 1
    assert vals.pop() == pytest.approx(1 / (4 / 3 * math.pi))


def test_nonuniform_density_integrates_to_one(rng):
    # Monte Carlo over the bounding box [-1, 1]^2
    pts = rng.uniform(-1, 1, size=(200_000, 2))
    dens = np.array([ball_density(v, 1.5, 1.0) for v in pts])
    assert 4 * dens.mean() == pytest.approx(1.0, abs=0.02)


def test_nonuniform_density_matches_samples(rng):
    # radial CDF of draws vs numerical integral of the density (L = 1, p = 1.5)
    v = _draws(lambda: sample_lp_ball(1, 1.5, 1.0, rng)[0], 50_000)
    grid = np.linspace(-1, 1, 4001)
    pdf = np.array([ball_density([t], 1.5, 1.0) for t in grid])
    cdf = np.concatenate([[0], np.cumsum((pdf[1:] + pdf[:-1]) / 2 * np.diff(grid))])
    emp = np.searchsorted(np.sort(v), grid) / v.size
    assert np.max(np.abs(emp - cdf)) < 0.015


def test_is_uniform():
    assert is_uniform(2.0) and is_uniform(math.inf) and not is_uniform(1.5)
    assert is_uniform(3.0, extra=3) and not is_uniform(2.0, extra=1)


@pytest.mark.parametrize("a,p,r,want", [
    ([1.0, 1.0], 2.0, 2.0, [1.0, 1.0]),
    ([3.0, 4.0], 2.0, 2.5, [1.5, 2.0]),
    ([-6.0, 0.0], math.inf, 3.0, [-3.0, 0.0]),
])
def test_projection_examples(a, p, r, want):
    np.testing.assert_allclose(project_to_ball(a, p, r), want)


def test_proposal_volume_closed_forms():
    assert BallProposal(2, 2.0, 3.0).log_density([0.0, 0.0]) == pytest.approx(-math.log(math.pi * 9))
    assert BallProposal(2, 1.0, 3.0).log_density([1.0, 1.0]) == pytest.approx(-math.log(2 * 9))
    assert BallProposal(3, math.inf, 2.0).log_density([1.0, -1.0, 0.0]) == pytest.approx(-3 * math.log(4))
    assert BallProposal(2, 2.0, 1.0).log_density([1.0, 1.0]) == -math.inf


def test_proposal_nonuniform_uses_density(rng):
    q = BallProposal(3, 1.5, 0.5)
    v = q.sample(rng)
    assert q.log_density(v) == pytest.approx(log_ball_density(v, 1.5, 0.5))


def test_constraint_ball():
    c = BallConstraint(2.0, 1.0, np.zeros(2))
    assert c.contains([0.6, 0.8]) and not c.contains([0.6, 0.81])
    with pytest.raises(ValueError):
        BallConstraint(0.5, 1.0, np.zeros(2))
    with pytest.raises(ValueError):
        BallConstraint(2.0, -1.0, np.zeros(2))


def test_lp_norm_no_overflow():
    assert lp_norm([1e200, 1e200], 2.0) == pytest.approx(math.sqrt(2) * 1e200)


# ------------------------------------------------------------ properties

_P = st.sampled_from([1.0, 1.5, 2.0, 3.0, math.inf])


@given(st.integers(1, 40), _P, st.floats(1e-3, 1e3), st.integers(0, 2 ** 32 - 1))
def test_every_ball_draw_inside(dim, p, radius, seed):
    v = sample_lp_ball(dim, p, radius, np.random.default_rng(seed))
    assert lp_norm(v, p) <= radius


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([1.0, 1.5, 2.0, 3.0]))
def test_density_sign_and_permutation_invariant(seed, p):
    r = np.random.default_rng(seed)
    v = sample_lp_ball(5, p, 1.0, r)
    flipped = r.permutation(v * r.choice([-1.0, 1.0], size=5))
    assert log_ball_density(flipped, p, 1.0) == pytest.approx(log_ball_density(v, p, 1.0), rel=1e-12)


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=12), _P, st.floats(0.0, 100.0))
def test_projection_idempotent_and_nonexpanding(a, p, r):
    once = project_to_ball(a, p, r)
    assert lp_norm(once, p) <= r * (1 + 1e-12)
    assert lp_norm(once, p) <= lp_norm(a, p) * (1 + 1e-12)
    np.testing.assert_allclose(project_to_ball(once, p, r), once, rtol=1e-12, atol=1e-300)

"""Generalized-Gaussian frame prior, bounded-error likelihood, hyperparameter moves.

Prior for a coefficient of group g (scale ``gamma = alpha**beta``)::

    f(x | gamma, beta) = beta / (2 gamma^(1/beta) Gamma(1/beta)) exp(-|x|^beta / gamma)

The likelihood is uniform on ``C_delta = {x : ||y - F* x||_p <= delta}`` and
the hyperprior is ``1/gamma`` times the indicator of ``beta in [0, 3]``.
Everything is evaluated in the log domain.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln, ndtr

from .frames import FrameOperator, GroupLayout
from .lp_ball import BallConstraint, lp_norm

BETA_MAX = 3.0
BETA_MIN = 0.05  # below this Gamma(1/beta) overflows; proposals there are rejected
BETA_PROPOSAL_SD = 0.05


@dataclass
class HyperParams:
    """Per-group ``(gamma_g, beta_g)``."""

    gamma: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        self.gamma = np.array(self.gamma, dtype=float).ravel()
        self.beta = np.array(self.beta, dtype=float).ravel()
        if self.gamma.shape != self.beta.shape:
            raise ValueError("gamma and beta must have one entry per group")
        if np.any(self.gamma <= 0) or np.any(self.beta <= 0) or np.any(self.beta > BETA_MAX):
            raise ValueError("need gamma > 0 and 0 < beta <= 3")

    @classmethod
    def from_alpha(cls, alpha, beta) -> "HyperParams":
        beta = np.asarray(beta, dtype=float)
        return cls(np.asarray(alpha, dtype=float) ** beta, beta)

    @property
    def G(self) -> int:
        return self.gamma.size

    @property
    def alpha(self) -> np.ndarray:
        return self.gamma ** (1.0 / self.beta)

    def copy(self) -> "HyperParams":
        return HyperParams(self.gamma.copy(), self.beta.copy())


@dataclass
class Observation:
    """Observed signal ``y`` and the error ball ``||y - F* x||_p <= delta``."""

    y: np.ndarray
    delta: float
    p: float = 2.0

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if not self.p >= 1:
            raise ValueError("p must be >= 1")

    @property
    def constraint(self) -> BallConstraint:
        return BallConstraint(self.p, self.delta, self.y)


def residual_norm(x: np.ndarray, obs: Observation, frame: FrameOperator) -> float:
    return lp_norm(obs.y - frame.synthesize(x), obs.p)


def in_constraint(x: np.ndarray, obs: Observation, frame: FrameOperator, tol: float = 0.0) -> bool:
    """``N(y - F* x) <= delta (+ tol)``."""
    return residual_norm(x, obs, frame) <= obs.delta + tol


def log_gg_normalizer(gamma, beta):
    """``log(beta / (2 gamma^(1/beta) Gamma(1/beta)))``."""
    gamma = np.asarray(gamma, dtype=float)
    beta = np.asarray(beta, dtype=float)
    return np.log(beta) - math.log(2.0) - np.log(gamma) / beta - gammaln(1.0 / beta)


def log_prior_from_sums(power_sums, sizes, theta: HyperParams) -> float:
    """Grouped GG log prior given ``sum_{k in S_g} |x_k|^beta_g`` for each group."""
    return float(np.sum(sizes * log_gg_normalizer(theta.gamma, theta.beta) - power_sums / theta.gamma))


def log_prior_x(x: np.ndarray, theta: HyperParams, layout: GroupLayout) -> float:
    return log_prior_from_sums(layout.power_sums(x, theta.beta), layout.sizes, theta)


def log_hyperprior(theta: HyperParams) -> float:
    if np.any(theta.beta <= 0) or np.any(theta.beta > BETA_MAX) or np.any(theta.gamma <= 0):
        return -math.inf
    return float(-np.sum(np.log(theta.gamma)))


def log_posterior(x: np.ndarray, theta: HyperParams, obs: Observation, frame: FrameOperator,
                  layout: GroupLayout, tol: float = 0.0) -> float:
    """Unnormalized joint log posterior of ``(x, theta)``; ``-inf`` outside ``C_delta``."""
    lh = log_hyperprior(theta)
    if lh == -math.inf or not in_constraint(x, obs, frame, tol):
        return -math.inf
    return log_prior_x(x, theta, layout) + lh


def sample_gg(gamma, beta, rng: np.random.Generator, size=None):
    """Draw from the density proportional to ``exp(-|x|^beta / gamma)``.

    ``|X|^beta / gamma`` is Gamma(1/beta, 1) distributed.
    """
    gamma = np.asarray(gamma, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if np.any(gamma <= 0) or np.any(beta <= 0):
        raise ValueError("gamma and beta must be positive")
    if size is None:
        size = np.broadcast(gamma, beta).shape
    w = rng.gamma(1.0 / beta, 1.0, size=size)
    sign = rng.integers(0, 2, size=size) * 2.0 - 1.0
    out = sign * (gamma * w) ** (1.0 / beta)
    return out if np.ndim(out) else float(out)


def sample_inverse_gamma(shape: float, scale: float, rng: np.random.Generator) -> float:
    return scale / rng.gamma(shape, 1.0)


def sample_gamma_conditional(abs_x_group: np.ndarray, beta: float, rng: np.random.Generator,
                             power_sum: float | None = None) -> float | None:
    """Exact draw of ``gamma_g`` from IG(n_g / beta_g, sum |x_k|^beta_g).

    Returns ``None`` when the scale is zero (all-zero group); callers keep the
    previous value.
    """
    b = float(np.sum(abs_x_group ** beta)) if power_sum is None else float(power_sum)
    if not b > 0.0:
        return None
    return sample_inverse_gamma(abs_x_group.size / beta, b, rng)


def log_beta_conditional(beta: float, n: int, gamma: float, power_sum: float) -> float:
    """``log f(beta | gamma, x)`` up to a constant."""
    return n * (math.log(beta) - math.log(gamma) / beta - math.lgamma(1.0 / beta)) - power_sum / gamma


def _log_trunc_mass(mean: float, sd: float, lo: float = 0.0, hi: float = BETA_MAX) -> float:
    return math.log(ndtr((hi - mean) / sd) - ndtr((lo - mean) / sd))


def sample_truncated_normal(mean: float, sd: float, rng: np.random.Generator,
                            lo: float = 0.0, hi: float = BETA_MAX) -> float:
    """Rejection from the untruncated normal; fine while ``mean`` is inside ``[lo, hi]``."""
    for _ in range(10_000):
        v = rng.normal(mean, sd)
        if lo <= v <= hi:
            return v
    raise RuntimeError("truncated normal rejection sampler failed")


class BetaStep(NamedTuple):
    beta: float
    accepted: bool
    power_sum: float  # sum |x_k|^beta at the returned beta
    clamped: bool     # candidate fell below BETA_MIN and was rejected


def mh_step_beta(abs_x_group: np.ndarray, gamma: float, beta_prev: float, rng: np.random.Generator,
                 sd: float = BETA_PROPOSAL_SD, power_sum_prev: float | None = None) -> BetaStep:
    """One MH move for ``beta_g`` with a Gaussian proposal truncated on [0, 3]."""
    n = abs_x_group.size
    s_prev = float(np.sum(abs_x_group ** beta_prev)) if power_sum_prev is None else power_sum_prev
    cand = sample_truncated_normal(beta_prev, sd, rng)
    if cand < BETA_MIN:
        return BetaStep(beta_prev, False, s_prev, True)
    s_cand = float(np.sum(abs_x_group ** cand))
    log_r = (log_beta_conditional(cand, n, gamma, s_cand) - log_beta_conditional(beta_prev, n, gamma, s_prev)
             # q(prev | cand) / q(cand | prev): the Gaussian kernels cancel, the truncation masses do not
             + _log_trunc_mass(beta_prev, sd) - _log_trunc_mass(cand, sd))
    if log_r >= 0 or rng.random() < math.exp(log_r):
        return BetaStep(cand, True, s_cand, False)
    return BetaStep(beta_prev, False, s_prev, False)


@dataclass
class HyperStats:
    beta_accepted: np.ndarray
    beta_proposed: np.ndarray
    beta_clamped: np.ndarray
    gamma_skipped: np.ndarray

    @classmethod
    def zeros(cls, G: int) -> "HyperStats":
        return cls(*(np.zeros(G, dtype=np.int64) for _ in range(4)))


@dataclass
class HyperSampler:
    """Sweep over groups: exact gamma draw then one beta MH move per group."""

    layout: GroupLayout
    beta_sd: float = BETA_PROPOSAL_SD
    stats: HyperStats = field(init=False)

    def __post_init__(self):
        self.stats = HyperStats.zeros(self.layout.G)

    def update(self, x: np.ndarray, theta: HyperParams, rng: np.random.Generator,
               power_sums: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Update ``theta`` in place.

        ``power_sums`` may carry ``sum |x_k|^beta_g`` at the current betas.
        Returns the power sums at the new betas and the per-group beta
        acceptance flags.
        """
        absx = np.abs(x)
        G = self.layout.G
        new_sums = np.empty(G)
        accepted = np.zeros(G, dtype=bool)
        for g in range(G):
            ax = absx[self.layout.indices(g)]
            b = theta.beta[g]
            s = float(np.sum(ax ** b)) if power_sums is None else float(power_sums[g])
            gam = sample_gamma_conditional(ax, b, rng, power_sum=s)
            if gam is None:
                self.stats.gamma_skipped[g] += 1
            else:
                theta.gamma[g] = gam
            step = mh_step_beta(ax, theta.gamma[g], b, rng, self.beta_sd, s)
            self.stats.beta_proposed[g] += 1
            self.stats.beta_accepted[g] += step.accepted
            self.stats.beta_clamped[g] += step.clamped
            theta.beta[g] = step.beta
            new_sums[g] = step.power_sum
            accepted[g] = step.accepted
        return new_sums, accepted


def initial_hyperparams(x: np.ndarray, layout: GroupLayout, beta0: float = 1.5) -> HyperParams:
    """Start at ``beta0`` with the moment estimate ``gamma = beta * mean |x|^beta``."""
    beta = np.full(layout.G, beta0)
    sums = layout.power_sums(x, beta)
    gamma = beta * sums / layout.sizes
    gamma[~(gamma > 0)] = 1.0
    return HyperParams(gamma, beta)

"""Hybrid MH sampler built on the split ``x = x_H + x_Hperp``, valid for any frame.

``x_H = F (F*F)^-1 u`` with ``u`` a random walk inside ``B(y, delta)``, so the
candidate always synthesizes to ``u`` and stays in ``C_delta``; the null-space
part is a Gaussian random walk projected on ``Null(F*)``, which contributes
nothing to the acceptance ratio.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .frames import FrameOperator, GroupLayout
from .gibbs import SamplerConfigError, check_eta
from .lp_ball import BallProposal, project_to_ball
from .model import HyperParams, HyperSampler, Observation, log_prior_from_sums


@dataclass
class MHState:
    x: np.ndarray
    u: np.ndarray
    theta: HyperParams
    power_sums: np.ndarray  # sum |x_k|^beta_g at the current x and betas
    iteration: int = 0
    accepted: int = 0
    proposed: int = 0
    last_accepted: int = 0
    last_beta_accepted: np.ndarray | None = None


class AlgebraicMHSampler:
    """``sigma_x`` is a scalar or one value per group (coefficient units)."""

    def __init__(self, frame: FrameOperator, layout: GroupLayout, obs: Observation,
                 eta: float | None = None, sigma_x=None, beta_sd: float = 0.05,
                 update_hyper: bool = True, proposal_extra: int | None = None):
        if layout.K != frame.K:
            raise SamplerConfigError("layout size does not match the frame")
        if obs.y.size != frame.L:
            raise SamplerConfigError("observation length does not match the frame")
        self.frame, self.layout, self.obs = frame, layout, obs
        self.eta = obs.delta / 10 if eta is None else float(eta)
        check_eta(obs.delta, self.eta)
        self.q_eta = BallProposal(frame.L, obs.p, self.eta, proposal_extra)
        self.hyper = HyperSampler(layout, beta_sd)
        self.update_hyper = update_hyper
        self.sigma_x = sigma_x
        self._sigma_k = None

    def set_sigma(self, sigma_x):
        s = np.asarray(sigma_x, dtype=float)
        if np.any(s <= 0):
            raise SamplerConfigError("sigma_x must be positive")
        self.sigma_x = sigma_x
        self._sigma_k = float(s) if s.ndim == 0 else self.layout.expand(s)

    def initial_state(self, theta0: HyperParams, u0: np.ndarray | None = None) -> MHState:
        u0 = self.obs.y.copy() if u0 is None else np.asarray(u0, dtype=float).ravel()
        if not self.obs.constraint.contains(u0):
            raise SamplerConfigError("u0 must lie in B(y, delta)")
        x0 = self.frame.range_component(u0)
        if self.sigma_x is None:
            med = float(np.median(np.abs(x0)))
            self.set_sigma(0.1 * med if med > 0 else 1.0)
        else:
            self.set_sigma(self.sigma_x)
        theta = theta0.copy()
        return MHState(x0, u0, theta, self.layout.power_sums(x0, theta.beta))

    def center_of(self, u: np.ndarray) -> np.ndarray:
        """``P(u - y) + y`` with ``P`` the radial projection on radius ``delta - eta``."""
        y = self.obs.y
        return project_to_ball(u - y, self.obs.p, self.obs.delta - self.eta) + y

    def propose_global(self, state: MHState, rng: np.random.Generator):
        """Return ``(x_cand, u_cand, u_center)``."""
        u_hat = self.center_of(state.u)
        u_cand = u_hat + self.q_eta.sample(rng)
        z = state.x + self._sigma_k * rng.standard_normal(self.frame.K)
        # F(F*F)^-1 u_cand + Pi_perp z in one analysis/synthesis pair
        x_cand = z + self.frame.range_component(u_cand - self.frame.synthesize(z))
        return x_cand, u_cand, u_hat

    def step(self, state: MHState, rng: np.random.Generator) -> MHState:
        theta, lay = state.theta, self.layout
        x_cand, u_cand, u_hat = self.propose_global(state, rng)
        sums_cand = lay.power_sums(x_cand, theta.beta)
        log_r = (log_prior_from_sums(sums_cand, lay.sizes, theta)
                 - log_prior_from_sums(state.power_sums, lay.sizes, theta)
                 + self.q_eta.log_density(state.u - self.center_of(u_cand))
                 - self.q_eta.log_density(u_cand - u_hat))
        state.proposed += 1
        state.last_accepted = 0
        if log_r >= 0 or rng.random() < math.exp(log_r):
            state.x, state.u, state.power_sums = x_cand, u_cand, sums_cand
            state.accepted += 1
            state.last_accepted = 1
        if self.update_hyper:
            state.power_sums, state.last_beta_accepted = self.hyper.update(state.x, theta, rng, state.power_sums)
        state.iteration += 1
        return state

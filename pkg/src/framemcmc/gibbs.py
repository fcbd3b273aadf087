"""Hybrid Gibbs sampler for unions of orthonormal bases (l_2 error ball).

Block ``n`` of ``x`` lives in the ball ``||x_n - c_n|| <= delta`` with
``c_n = F_n (y - sum_{m != n} F*_m x_m)``; each block gets a random-walk MH
move on a radius-``eta`` ball whose center is pulled inside ``B(c_n, delta - eta)``.
Also provides the naive rejection sampler of the coefficient conditional.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .frames import FrameOperator, GroupLayout, UnionOfBases
from .lp_ball import BallProposal, lp_norm, project_to_ball
from .model import HyperParams, HyperSampler, Observation, sample_gg


class SamplerConfigError(ValueError):
    """Sampler cannot be used with this frame / constraint combination."""


class RejectionSamplingError(RuntimeError):
    pass


@dataclass
class GibbsState:
    x: np.ndarray
    theta: HyperParams
    iteration: int = 0
    block_accepted: np.ndarray = field(default=None)
    block_proposed: np.ndarray = field(default=None)
    last_beta_accepted: np.ndarray | None = None
    last_accepted: int = 0  # blocks accepted in the latest sweep


def check_eta(delta: float, eta: float):
    if not 0 < eta < delta:
        raise SamplerConfigError(f"need 0 < eta < delta, got eta={eta}, delta={delta}")


class UnionGibbsSampler:
    def __init__(self, frame: FrameOperator, layout: GroupLayout, obs: Observation,
                 eta: float | None = None, beta_sd: float = 0.05, update_hyper: bool = True):
        if not isinstance(frame, UnionOfBases):
            raise SamplerConfigError("the Gibbs sampler needs a union of orthonormal bases")
        if obs.p != 2:
            raise SamplerConfigError("the Gibbs sampler block equivalence needs the l_2 norm (p = 2)")
        if layout.K != frame.K:
            raise SamplerConfigError("layout size does not match the frame")
        self.frame, self.layout, self.obs = frame, layout, obs
        self.eta = obs.delta / 10 if eta is None else float(eta)
        check_eta(obs.delta, self.eta)
        self.proposal = BallProposal(frame.L, 2.0, self.eta)
        self.hyper = HyperSampler(layout, beta_sd)
        self.update_hyper = update_hyper

    def initial_state(self, theta0: HyperParams, x0: np.ndarray | None = None) -> GibbsState:
        if x0 is None:
            x0 = self.frame.analyze(self.obs.y) / self.frame.mu
        M = self.frame.M
        return GibbsState(np.array(x0, dtype=float), theta0.copy(),
                          block_accepted=np.zeros(M, dtype=np.int64), block_proposed=np.zeros(M, dtype=np.int64))

    def block_center(self, n: int, x: np.ndarray) -> np.ndarray:
        f = self.frame
        rest = self.obs.y.copy()
        for m, basis in enumerate(f.bases):
            if m != n:
                rest -= basis.synthesize(x[f.block_slice(m)])
        return f.bases[n].analyze(rest)

    def center_of(self, xn: np.ndarray, c: np.ndarray) -> np.ndarray:
        """Proposal-ball center ``P(x_n - c_n) + c_n`` with ``P`` onto radius ``delta - eta``."""
        return project_to_ball(xn - c, 2.0, self.obs.delta - self.eta) + c

    def propose_block(self, xn_prev: np.ndarray, c: np.ndarray, rng: np.random.Generator):
        xhat = self.center_of(xn_prev, c)
        return xhat + self.proposal.sample(rng), xhat

    def sweep(self, state: GibbsState, rng: np.random.Generator) -> GibbsState:
        f, lay, theta = self.frame, self.layout, state.theta
        beta_k = lay.expand(theta.beta)
        inv_gamma_k = 1.0 / lay.expand(theta.gamma)
        powers = np.empty(f.K)
        accepted = 0
        for n in range(f.M):
            sl = f.block_slice(n)
            c = self.block_center(n, state.x)
            xn = state.x[sl]
            cand, xhat = self.propose_block(xn, c, rng)
            p_old = np.abs(xn) ** beta_k[sl]
            p_new = np.abs(cand) ** beta_k[sl]
            state.block_proposed[n] += 1
            take = False
            # rounding can push a draw a hair outside; the indicator is hard
            if lp_norm(cand - c, 2.0) <= self.obs.delta:
                log_r = (float(p_old @ inv_gamma_k[sl] - p_new @ inv_gamma_k[sl])
                         + self.proposal.log_density(xn - self.center_of(cand, c))
                         - self.proposal.log_density(cand - xhat))
                take = log_r >= 0 or rng.random() < math.exp(log_r)
            if take:
                state.x[sl] = cand
                powers[sl] = p_new
                state.block_accepted[n] += 1
                accepted += 1
            else:
                powers[sl] = p_old
        state.last_accepted = accepted
        if self.update_hyper:
            _, state.last_beta_accepted = self.hyper.update(state.x, theta, rng, lay.group_sums(powers))
        state.iteration += 1
        return state


def naive_rejection_sample(theta: HyperParams, obs: Observation, frame: FrameOperator,
                           layout: GroupLayout, rng: np.random.Generator, max_tries: int = 100_000,
                           return_tries: bool = False):
    """Independent GG draws accepted only when ``N(y - F* x) <= delta``."""
    if not obs.delta > 0:
        raise RejectionSamplingError("delta = 0: the constraint set has measure zero")
    gam = layout.expand(theta.gamma)
    bet = layout.expand(theta.beta)
    for t in range(1, max_tries + 1):
        x = sample_gg(gam, bet, rng)
        if lp_norm(obs.y - frame.synthesize(x), obs.p) <= obs.delta:
            return (x, t) if return_tries else x
    raise RejectionSamplingError(f"no accepted draw after {max_tries} tries")

"""Experiment drivers: synthetic hyperparameter recovery, convergence study and denoising."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .chain import ChainTrace, SamplerConfig, run_chain
from .frames import FrameOperator, GroupLayout
from .inference import mmse_estimate, nmse, psrf_table, snr_db, ssim, wiener_baseline
from .lp_ball import sample_lp_ball
from .model import HyperParams, Observation, sample_gg

log = logging.getLogger(__name__)

# Ranges the synthetic hyperparameters are drawn from. The flat hyperpriors
# are improper, so the truth is drawn from a bounded, plausible box instead.
BETA_RANGE = (1.2, 2.4)
ALPHA_RANGE = (5.0, 20.0)


def draw_hyperparams(G: int, rng: np.random.Generator, beta_range=BETA_RANGE,
                     alpha_range=ALPHA_RANGE) -> HyperParams:
    """``beta`` uniform, ``alpha`` log-uniform; ``gamma = alpha ** beta``."""
    beta = rng.uniform(*beta_range, size=G)
    alpha = np.exp(rng.uniform(math.log(alpha_range[0]), math.log(alpha_range[1]), size=G))
    return HyperParams.from_alpha(alpha, beta)


def synthetic_problem(frame: FrameOperator, layout: GroupLayout, theta: HyperParams,
                      rng: np.random.Generator, delta: float = 1e-4, p: float = 2.0):
    """Coefficients from the grouped GG prior and the exact synthesis ``y = F* x``."""
    x = sample_gg(layout.expand(theta.gamma), layout.expand(theta.beta), rng)
    return x, Observation(frame.synthesize(x), delta, p)


@dataclass
class ValidationReport:
    truth: HyperParams
    group_names: list
    beta_hat: np.ndarray   # (R, G)
    gamma_hat: np.ndarray  # (R, G)
    acceptance: list = field(default_factory=list)
    seconds: list = field(default_factory=list)

    @property
    def alpha_hat(self) -> np.ndarray:
        return self.gamma_hat ** (1.0 / self.beta_hat)

    @property
    def nmse_beta(self) -> np.ndarray:
        return nmse(self.beta_hat, self.truth.beta)

    @property
    def nmse_alpha(self) -> np.ndarray:
        return nmse(self.alpha_hat, self.truth.alpha)

    @property
    def nmse_gamma(self) -> np.ndarray:
        return nmse(self.gamma_hat, self.truth.gamma)

    def as_dict(self) -> dict:
        rows = []
        for g, name in enumerate(self.group_names):
            rows.append({
                "group": name,
                "beta_true": float(self.truth.beta[g]), "alpha_true": float(self.truth.alpha[g]),
                "beta_mean_estimate": float(self.beta_hat[:, g].mean()),
                "alpha_mean_estimate": float(self.alpha_hat[:, g].mean()),
                "nmse_beta": float(self.nmse_beta[g]), "nmse_alpha": float(self.nmse_alpha[g]),
            })
        return {
            "runs": int(self.beta_hat.shape[0]),
            "groups": rows,
            "max_nmse_beta": float(self.nmse_beta.max()),
            "max_nmse_alpha": float(self.nmse_alpha.max()),
            "acceptance": [float(a) for a in self.acceptance],
            "seconds": [float(s) for s in self.seconds],
        }


def run_validation(frame: FrameOperator, layout: GroupLayout, cfg: SamplerConfig, runs: int,
                   seed: int, delta: float = 1e-4, p: float = 2.0,
                   truth: HyperParams | None = None) -> ValidationReport:
    """Monte Carlo hyperparameter recovery.

    The true hyperparameters are drawn once; each run draws fresh
    coefficients and runs one chain with its own seed.
    """
    root = np.random.SeedSequence(seed)
    truth_ss, *run_ss = root.spawn(runs + 1)
    if truth is None:
        truth = draw_hyperparams(layout.G, np.random.default_rng(truth_ss))
    bh = np.empty((runs, layout.G))
    gh = np.empty((runs, layout.G))
    rep = ValidationReport(truth, list(layout.names), bh, gh)
    for r, ss in enumerate(run_ss):
        data_ss, chain_ss = ss.spawn(2)
        _, obs = synthetic_problem(frame, layout, truth, np.random.default_rng(data_ss), delta, p)
        t0 = time.perf_counter()
        tr = run_chain(cfg, obs, frame, layout, np.random.default_rng(chain_ss))
        rep.seconds.append(time.perf_counter() - t0)
        _, theta = mmse_estimate(tr, cfg.burn_in)
        bh[r], gh[r] = theta.beta, theta.gamma
        rep.acceptance.append(tr.acceptance_rate(cfg.burn_in))
        log.info("run %d/%d: %.1fs, acceptance %.3f", r + 1, runs, rep.seconds[-1], rep.acceptance[-1])
    return rep


def run_convergence(frame: FrameOperator, layout: GroupLayout, cfg: SamplerConfig, obs: Observation,
                    seeds) -> tuple[list[ChainTrace], dict[str, float]]:
    """Parallel chains on one observation and their PSRF table."""
    traces = [run_chain(replace(cfg, seed=s), obs, frame, layout, np.random.default_rng(s)) for s in seeds]
    return traces, psrf_table(traces, cfg.burn_in)


def add_noise(img, p: float, radius: float, rng: np.random.Generator) -> np.ndarray:
    """``img + n`` with ``n`` drawn on the centered l_p ball of the image space."""
    img = np.asarray(img, dtype=float)
    return img + sample_lp_ball(img.size, p, radius, rng).reshape(img.shape)


@dataclass
class DenoiseResult:
    image: np.ndarray          # F* x_hat clamped to [0, 255]
    raw: np.ndarray            # unclamped F* x_hat
    wiener: np.ndarray
    theta: HyperParams
    trace: ChainTrace
    metrics: dict


def denoise(noisy, frame: FrameOperator, layout: GroupLayout, cfg: SamplerConfig, delta: float,
            p: float, rng: np.random.Generator, reference=None, wiener_window: int = 3) -> DenoiseResult:
    """MMSE denoising: sample, average the coefficients, synthesize."""
    noisy = np.asarray(noisy, dtype=float)
    obs = Observation(noisy.ravel(), delta, p)
    tr = run_chain(cfg, obs, frame, layout, rng)
    x_hat, theta = mmse_estimate(tr, cfg.burn_in)
    raw = frame.synthesize(x_hat).reshape(noisy.shape)
    out = np.clip(raw, 0.0, 255.0)
    wien = wiener_baseline(noisy, wiener_window)
    metrics = {"acceptance": tr.acceptance_rate(cfg.burn_in), "iterations": tr.iterations}
    if reference is not None:
        ref = np.asarray(reference, dtype=float)
        for name, im in (("noisy", noisy), ("wiener", np.clip(wien, 0, 255)), ("mcmc", out)):
            metrics[f"snr_{name}"] = snr_db(ref, im)
            metrics[f"ssim_{name}"] = ssim(ref, im)
    return DenoiseResult(out, raw, wien, theta, tr, metrics)

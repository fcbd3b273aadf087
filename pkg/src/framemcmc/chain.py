"""Chain driver shared by both samplers and the trace it produces."""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .algebraic import AlgebraicMHSampler
from .frames import FrameOperator, GroupLayout
from .gibbs import SamplerConfigError, UnionGibbsSampler
from .model import HyperParams, Observation, initial_hyperparams, residual_norm

log = logging.getLogger(__name__)


class ConstraintViolationError(AssertionError):
    """An accepted state left ``C_delta``."""


@dataclass
class SamplerConfig:
    """Chain settings.

    ``eta`` and ``sigma_x`` default to ``delta / 10`` and
    ``0.1 * median |x0|``. ``sigma_mode="group"`` scales the null-space
    step of each group by the RMS of its initial coefficients times
    ``sigma_rel``. ``adapt`` retunes the coefficient step size during
    burn-in towards ``target_accept`` and freezes it afterwards.
    """

    sampler: int = 2
    iterations: int = 1000
    burn_in: int = 0
    thin: int = 10
    eta: float | None = None
    sigma_x: float | None = None
    sigma_mode: str = "scalar"
    sigma_rel: float = 0.1
    adapt: bool = False
    target_accept: float = 0.25
    adapt_window: int = 100
    beta0: float = 1.5
    beta_sd: float = 0.05
    check_constraint: bool = True
    constraint_tol: float = 1e-8
    seed: int | None = None

    def validate(self):
        if self.sampler not in (1, 2):
            raise SamplerConfigError("sampler must be 1 or 2")
        if self.iterations < 1 or self.thin < 1:
            raise SamplerConfigError("iterations and thin must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise SamplerConfigError("need 0 <= burn_in < iterations")
        if self.sigma_mode not in ("scalar", "group"):
            raise SamplerConfigError("sigma_mode is 'scalar' or 'group'")


@dataclass
class ChainTrace:
    """Hyperparameters every iteration, coefficient snapshots every ``thin`` iterations.

    Snapshot ``j`` is the state after iteration ``(j + 1) * thin``.
    """

    gamma: np.ndarray            # (T, G)
    beta: np.ndarray             # (T, G)
    beta_accepted: np.ndarray    # (T, G) bool
    x_accepted: np.ndarray       # (T,) coefficient moves accepted per iteration
    residual: np.ndarray         # (T,) N(y - F* x), NaN when not checked
    snapshots: np.ndarray        # (N, K)
    thin: int
    group_names: list[str]
    counters: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return self.gamma.shape[0]

    @property
    def G(self) -> int:
        return self.gamma.shape[1]

    @property
    def K(self) -> int:
        return self.snapshots.shape[1]

    @property
    def snapshot_iterations(self) -> np.ndarray:
        return (np.arange(self.snapshots.shape[0]) + 1) * self.thin

    def alpha(self) -> np.ndarray:
        return self.gamma ** (1.0 / self.beta)

    def acceptance_rate(self, start: int = 0, stop: int | None = None) -> float:
        moves = self.config.get("moves_per_iteration", 1)
        a = self.x_accepted[start:stop]
        return float(a.sum()) / (moves * a.size) if a.size else math.nan

    def __eq__(self, other):
        if not isinstance(other, ChainTrace):
            return NotImplemented
        arrays = ("gamma", "beta", "beta_accepted", "x_accepted", "residual", "snapshots")
        same = all(np.array_equal(getattr(self, a), getattr(other, a), equal_nan=a == "residual") for a in arrays)
        return (same and self.thin == other.thin and self.group_names == other.group_names
                and self.counters == other.counters and self.config == other.config)


def make_sampler(cfg: SamplerConfig, obs: Observation, frame: FrameOperator, layout: GroupLayout):
    if cfg.sampler == 1:
        return UnionGibbsSampler(frame, layout, obs, eta=cfg.eta, beta_sd=cfg.beta_sd)
    return AlgebraicMHSampler(frame, layout, obs, eta=cfg.eta, sigma_x=cfg.sigma_x, beta_sd=cfg.beta_sd)


def _group_rms(x, layout):
    rms = np.sqrt(layout.group_sums(x * x) / layout.sizes)
    fallback = rms[rms > 0].min() if np.any(rms > 0) else 1.0
    return np.where(rms > 0, rms, fallback)


def run_chain(cfg: SamplerConfig, obs: Observation, frame: FrameOperator, layout: GroupLayout,
              rng: np.random.Generator, theta0: HyperParams | None = None) -> ChainTrace:
    """Run ``cfg.iterations`` sweeps and collect a :class:`ChainTrace`.

    If anything raises mid-run, the partial trace is attached to the
    exception as ``err.trace``.
    """
    cfg.validate()
    sampler = make_sampler(cfg, obs, frame, layout)
    if cfg.sampler == 1:
        state = sampler.initial_state(theta0 or HyperParams(np.ones(layout.G), np.full(layout.G, cfg.beta0)))
        if theta0 is None:
            state.theta = initial_hyperparams(state.x, layout, cfg.beta0)
        step, moves = sampler.sweep, frame.M
    else:
        if cfg.sigma_mode == "group" and cfg.sigma_x is None:
            x0 = frame.range_component(obs.y)
            sampler.sigma_x = cfg.sigma_rel * _group_rms(x0, layout)
        state = sampler.initial_state(theta0 or HyperParams(np.ones(layout.G), np.full(layout.G, cfg.beta0)))
        if theta0 is None:
            state.theta = initial_hyperparams(state.x, layout, cfg.beta0)
            state.power_sums = layout.power_sums(state.x, state.theta.beta)
        step, moves = sampler.step, 1

    T, G = cfg.iterations, layout.G
    gam = np.empty((T, G))
    bet = np.empty((T, G))
    bacc = np.zeros((T, G), dtype=bool)
    xacc = np.zeros(T, dtype=np.int64)
    resid = np.full(T, np.nan)
    snaps = np.empty((T // cfg.thin, frame.K))
    violations = 0
    scale = 1.0
    base_sigma = getattr(sampler, "sigma_x", None)

    def build(n_done):
        return ChainTrace(
            gam[:n_done].copy(), bet[:n_done].copy(), bacc[:n_done].copy(), xacc[:n_done].copy(),
            resid[:n_done].copy(), snaps[: n_done // cfg.thin].copy(), cfg.thin, list(layout.names),
            counters={
                "x_accepted": int(xacc[:n_done].sum()),
                "x_proposed": int(n_done * moves),
                "beta_accepted": int(sampler.hyper.stats.beta_accepted.sum()),
                "beta_proposed": int(sampler.hyper.stats.beta_proposed.sum()),
                "beta_clamped": int(sampler.hyper.stats.beta_clamped.sum()),
                "gamma_skipped": int(sampler.hyper.stats.gamma_skipped.sum()),
                "constraint_violations": violations,
            },
            config={
                "sampler": cfg.sampler, "seed": cfg.seed, "eta": float(sampler.eta),
                "sigma_x": _jsonable(getattr(sampler, "sigma_x", None)),
                "delta": float(obs.delta), "p": float(obs.p), "burn_in": cfg.burn_in,
                "moves_per_iteration": moves, "adapt": cfg.adapt, "sigma_scale": scale,
            },
        )

    i = 0
    try:
        for i in range(T):
            step(state, rng)
            gam[i] = state.theta.gamma
            bet[i] = state.theta.beta
            if state.last_beta_accepted is not None:
                bacc[i] = state.last_beta_accepted
            xacc[i] = state.last_accepted
            if cfg.check_constraint:
                resid[i] = residual_norm(state.x, obs, frame)
                if not resid[i] <= obs.delta + cfg.constraint_tol:
                    violations += 1
                    raise ConstraintViolationError(
                        f"iteration {i + 1}: residual {resid[i]:.3e} exceeds delta {obs.delta:.3e}")
            if (i + 1) % cfg.thin == 0:
                snaps[(i + 1) // cfg.thin - 1] = state.x
            if cfg.adapt and cfg.sampler == 2 and i < cfg.burn_in and (i + 1) % cfg.adapt_window == 0:
                rate = xacc[i + 1 - cfg.adapt_window: i + 1].mean()
                # diminishing Robbins-Monro update on log scale, frozen after burn-in
                k = (i + 1) // cfg.adapt_window
                scale *= math.exp((rate - cfg.target_accept) / math.sqrt(k))
                sampler.set_sigma(np.asarray(base_sigma) * scale)
    except Exception as err:
        err.trace = build(i)
        raise
    trace = build(T)
    log.debug("chain done: x acceptance %.3f", trace.acceptance_rate())
    return trace


def _jsonable(v):
    if v is None:
        return None
    a = np.asarray(v, dtype=float)
    return float(a) if a.ndim == 0 else [float(t) for t in a]

"""Sampling on l_p spheres and balls, and the radial ball projection.

Sphere and ball draws follow the generalized-Gaussian construction: with
``A`` having i.i.d. components of density proportional to
``exp(-|a|^p / p)``, ``A / ||A||_p`` is uniform on the unit l_p sphere of
``R^{L'}`` and its first ``L`` coordinates have the closed-form density
implemented in :func:`log_ball_density`. Taking ``L' = L + p`` (integer p)
makes that density constant, i.e. uniform on the unit ball.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def lp_norm(a, p: float) -> float:
    a = np.abs(np.asarray(a, dtype=float).ravel())
    if a.size == 0:
        return 0.0
    if math.isinf(p):
        return float(a.max())
    m = a.max()
    if m == 0.0:
        return 0.0
    # scale first so large p does not overflow
    return float(m * np.sum((a / m) ** p) ** (1.0 / p))


def _augmented_dim(dim: int, p: float, extra: int | None) -> int:
    if extra is not None:
        if extra < 1:
            raise ValueError("extra dimensions must be >= 1")
        return dim + extra
    return dim + int(math.ceil(p))


def is_uniform(p: float, extra: int | None = None) -> bool:
    """Whether :func:`sample_lp_ball` is exactly uniform for this ``p``."""
    if math.isinf(p):
        return True
    return (extra is None and float(p).is_integer()) or (extra is not None and extra == p)


def _gg_components(size: int, p: float, rng: np.random.Generator) -> np.ndarray:
    w = rng.gamma(1.0 / p, p, size=size)
    sign = rng.integers(0, 2, size=size) * 2.0 - 1.0
    return sign * w ** (1.0 / p)


def sample_lp_sphere(dim: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw on the surface of the unit l_p sphere of ``R^dim``."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if not (0 < p < math.inf):
        raise ValueError("p must be a positive finite real")
    while True:
        a = _gg_components(dim, p, rng)
        n = lp_norm(a, p)
        if n > 0:
            return a / n


def sample_lp_ball(dim: int, p: float, radius: float, rng: np.random.Generator,
                   extra: int | None = None) -> np.ndarray:
    """Draw a vector in the l_p ball of the given radius.

    Uses the first ``dim`` coordinates of a uniform sphere draw in
    ``R^{dim + extra}``. ``extra`` defaults to ``p`` for integer ``p``
    (uniform) and ``ceil(p)`` otherwise (non-uniform, density given by
    :func:`log_ball_density`). ``p = inf`` samples each coordinate uniformly.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    if math.isinf(p):
        return rng.uniform(-radius, radius, size=dim)
    if p <= 0:
        raise ValueError("p must be positive")
    u = sample_lp_sphere(_augmented_dim(dim, p, extra), p, rng)
    return radius * u[:dim]


def log_ball_density(v, p: float, radius: float, extra: int | None = None) -> float:
    """Log density of :func:`sample_lp_ball` at ``v`` (``-inf`` outside the ball)."""
    v = np.asarray(v, dtype=float).ravel()
    L = v.size
    if radius <= 0:
        return -math.inf
    if math.isinf(p):
        return -L * math.log(2.0 * radius) if np.abs(v).max(initial=0.0) <= radius else -math.inf
    Lp = _augmented_dim(L, p, extra)
    expo = (Lp - L) / p - 1.0
    s = np.sum(np.abs(v / radius) ** p)
    if s > 1.0 or (s == 1.0 and expo != 0.0):
        return -math.inf
    logc = (L * math.log(p) + math.lgamma(Lp / p) - L * math.log(2.0)
            - L * math.lgamma(1.0 / p) - math.lgamma((Lp - L) / p))
    body = expo * math.log1p(-s) if expo != 0.0 else 0.0
    return logc + body - L * math.log(radius)


def ball_density(v, p: float, radius: float, extra: int | None = None) -> float:
    """Linear-domain density; exact closed form while the Gamma values stay finite."""
    v = np.asarray(v, dtype=float).ravel()
    L = v.size
    if math.isinf(p) or L > 100:
        return math.exp(log_ball_density(v, p, radius, extra))
    lp = log_ball_density(v, p, radius, extra)
    if lp == -math.inf:
        return 0.0
    Lp = _augmented_dim(L, p, extra)
    expo = (Lp - L) / p - 1.0
    try:
        if expo == 0.0:
            # uniform case: 1 / volume of the unit ball
            c = math.gamma(L / p + 1.0) / (2.0 * math.gamma(1.0 / p + 1.0)) ** L
        else:
            c = (p ** L * math.gamma(Lp / p)
                 / (2.0 ** L * math.gamma(1.0 / p) ** L * math.gamma((Lp - L) / p)))
    except OverflowError:
        return math.exp(lp)
    s = float(np.sum(np.abs(v / radius) ** p))
    return c * (1.0 - s) ** expo / radius ** L if expo != 0.0 else c / radius ** L


def project_to_ball(a, p: float, radius: float) -> np.ndarray:
    """Radial scaling onto the l_p ball: ``a`` if inside, else ``a * radius / ||a||_p``.

    For ``p = inf`` this is still radial scaling, not the nearest point.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    a = np.asarray(a, dtype=float)
    n = lp_norm(a, p)
    if n <= radius:
        return a.copy()
    return a * (radius / n)


@dataclass(frozen=True)
class BallConstraint:
    """``{v : ||v - center||_p <= radius}``."""

    p: float
    radius: float
    center: np.ndarray

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")
        if not self.p >= 1:
            raise ValueError("constraint balls need p >= 1")

    def distance(self, v) -> float:
        return lp_norm(np.asarray(v, dtype=float).ravel() - self.center.ravel(), self.p)

    def contains(self, v, tol: float = 0.0) -> bool:
        return self.distance(v) <= self.radius + tol


class BallProposal:
    """Proposal law ``q_eta`` on the centered ball of radius ``eta`` in ``R^dim``."""

    def __init__(self, dim: int, p: float, eta: float, extra: int | None = None):
        if eta <= 0:
            raise ValueError("eta must be positive")
        self.dim, self.p, self.eta, self.extra = dim, p, eta, extra
        self.uniform = is_uniform(p, extra)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return sample_lp_ball(self.dim, self.p, self.eta, rng, self.extra)

    def log_density(self, v) -> float:
        if self.uniform:
            # constant on the closed ball
            if lp_norm(v, self.p) > self.eta:
                return -math.inf
            return self._log_volume_inv
        return log_ball_density(v, self.p, self.eta, self.extra)

    @property
    def _log_volume_inv(self) -> float:
        L, p, r = self.dim, self.p, self.eta
        if math.isinf(p):
            return -L * math.log(2.0 * r)
        # volume of the l_p ball: (2 Gamma(1/p + 1))^L / Gamma(L/p + 1) r^L
        return -(L * math.log(2.0 * math.gamma(1.0 / p + 1.0)) - math.lgamma(L / p + 1.0) + L * math.log(r))

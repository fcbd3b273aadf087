"""Post-processing of chains: convergence diagnostic, MMSE estimates, image metrics."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy import ndimage
from scipy.special import gammainc

from .chain import ChainTrace
from .model import HyperParams

SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_RANGE = 255.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5


def psrf(chains: Sequence[np.ndarray]) -> float:
    """Gelman-Rubin potential scale reduction for one scalar.

    ``chains`` are equal-length 1-D sample arrays (burn-in already dropped).
    Values slightly below 1 are legitimate and are not corrected.
    """
    c = np.asarray([np.asarray(a, dtype=float).ravel() for a in chains])
    if c.ndim != 2 or c.shape[0] < 2:
        raise ValueError("need at least two chains of equal length")
    m, n = c.shape
    if n < 10:
        raise ValueError("need at least 10 post-burn-in samples per chain")
    means = c.mean(axis=1)
    W = c.var(axis=1, ddof=1).mean()
    if W == 0.0:
        return 1.0
    B = n * means.var(ddof=1)
    return math.sqrt(((n - 1) / n * W + B / n) / W)


def psrf_table(traces: Sequence[ChainTrace], burn_in: int) -> dict[str, float]:
    """PSRF of every ``beta_g`` and ``gamma_g`` across chains."""
    if len(traces) < 2:
        raise ValueError("need at least two traces")
    T = {t.iterations for t in traces}
    G = {t.G for t in traces}
    if len(T) != 1 or len(G) != 1:
        raise ValueError("traces differ in length or group count")
    if not 0 <= burn_in < T.pop():
        raise ValueError("burn_in must be smaller than the trace length")
    names = traces[0].group_names
    out = {}
    for g in range(G.pop()):
        out[f"beta[{names[g]}]"] = psrf([t.beta[burn_in:, g] for t in traces])
        out[f"gamma[{names[g]}]"] = psrf([t.gamma[burn_in:, g] for t in traces])
    return out


def mmse_estimate(trace: ChainTrace, burn_in: int) -> tuple[np.ndarray, HyperParams]:
    """Posterior means of the coefficients (from snapshots) and of ``(gamma, beta)``."""
    keep = trace.snapshot_iterations > burn_in
    if burn_in >= trace.iterations or not np.any(keep):
        raise ValueError("no post-burn-in samples")
    x_hat = trace.snapshots[keep].mean(axis=0)
    theta = HyperParams(trace.gamma[burn_in:].mean(axis=0), trace.beta[burn_in:].mean(axis=0))
    return x_hat, theta


def nmse(estimates, truth):
    """Mean over runs (axis 0) of ``(est - truth)^2 / truth^2``."""
    est = np.asarray(estimates, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if np.any(truth == 0):
        raise ValueError("NMSE is undefined for a zero true value")
    err = np.mean((est - truth) ** 2 / truth ** 2, axis=0)
    return float(err) if np.ndim(err) == 0 else err


def snr_db(ref, est) -> float:
    """``20 log10(||ref|| / ||ref - est||)``; ``+inf`` when the inputs are identical."""
    ref = np.asarray(ref, dtype=float)
    est = np.asarray(est, dtype=float)
    if ref.shape != est.shape:
        raise ValueError("shape mismatch")
    err = np.linalg.norm(ref - est)
    if err == 0:
        return math.inf
    return 20.0 * math.log10(np.linalg.norm(ref) / err)


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    t = np.arange(size) - (size - 1) / 2
    g = np.exp(-t ** 2 / (2 * sigma ** 2))
    w = np.outer(g, g)
    return w / w.sum()


def ssim(a, b, data_range: float = SSIM_RANGE) -> float:
    """Mean SSIM over all fully-contained 11x11 Gaussian windows.

    Population (not sample) moments are used inside each window. The value is
    not clipped, so strongly anti-correlated images can give a negative mean.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("shape mismatch")
    if a.ndim != 2 or min(a.shape) < SSIM_WINDOW:
        raise ValueError(f"need 2-D images of at least {SSIM_WINDOW}x{SSIM_WINDOW}")
    w = gaussian_window()

    def filt(img):
        return _valid_correlate(img, w)

    mu_a, mu_b = filt(a), filt(b)
    saa = filt(a * a) - mu_a ** 2
    sbb = filt(b * b) - mu_b ** 2
    sab = filt(a * b) - mu_a * mu_b
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    smap = ((2 * mu_a * mu_b + c1) * (2 * sab + c2)) / ((mu_a ** 2 + mu_b ** 2 + c1) * (saa + sbb + c2))
    return float(smap.mean())


def _valid_correlate(img, w):
    full = ndimage.correlate(img, w, mode="constant")
    r0, r1 = w.shape[0] // 2, w.shape[1] // 2
    return full[r0: img.shape[0] - r0, r1: img.shape[1] - r1]


def estimate_noise_sigma(img) -> float:
    """Robust noise level: MAD of the finest diagonal Haar subband / 0.6745."""
    img = np.asarray(img, dtype=float)
    h, w = (img.shape[0] // 2) * 2, (img.shape[1] // 2) * 2
    t = img[:h, :w]
    d = (t[0::2, 0::2] - t[0::2, 1::2] - t[1::2, 0::2] + t[1::2, 1::2]) / 2.0
    return float(np.median(np.abs(d)) / 0.6745)


def wiener_baseline(noisy, window: int = 3, noise_var: float | None = None) -> np.ndarray:
    """Locally adaptive Wiener filter (reflecting borders).

    ``noise_var`` defaults to the squared MAD estimate of
    :func:`estimate_noise_sigma`.
    """
    if window < 3 or window % 2 == 0:
        raise ValueError("window must be odd and >= 3")
    img = np.asarray(noisy, dtype=float)
    if noise_var is None:
        noise_var = estimate_noise_sigma(img) ** 2
    if noise_var <= 0:
        return img.copy()
    mean = ndimage.uniform_filter(img, window, mode="reflect")
    var = np.maximum(ndimage.uniform_filter(img * img, window, mode="reflect") - mean ** 2, 0.0)
    gain = np.where(var > noise_var, 1.0 - noise_var / np.where(var > 0, var, 1.0), 0.0)
    return mean + gain * (img - mean)


def gg_cdf(x, gamma: float, beta: float):
    x = np.asarray(x, dtype=float)
    return 0.5 + 0.5 * np.sign(x) * gammainc(1.0 / beta, np.abs(x) ** beta / gamma)


def histogram_table(values, gamma: float, beta: float, bins: int = 50):
    """Rows ``(bin center, empirical density, fitted GG density)``.

    The fitted column is the GG mass of each bin divided by its width, so
    both density columns integrate (times the bin width) to their mass on
    the histogram range.
    """
    values = np.asarray(values, dtype=float).ravel()
    dens, edges = np.histogram(values, bins=bins, density=True)
    width = np.diff(edges)
    fitted = np.diff(gg_cdf(edges, gamma, beta)) / width
    centers = 0.5 * (edges[:-1] + edges[1:])
    return np.column_stack([centers, dens, fitted])

"""Wavelet frame operators with periodic boundaries.

Three concrete frames are provided:

* :class:`OrthonormalWavelet` -- a separable periodic DWT (1-D or 2-D),
* :class:`UnionOfBases` -- a concatenation of M orthonormal bases, tight
  with ``mu = M``,
* :class:`TranslationInvariantWavelet` -- an undecimated (a trous) transform
  normalized so that ``F*F = I``.

:class:`MatrixFrame` wraps an explicit ``K x L`` matrix and exists mostly to
exercise the non-tight code paths (conjugate gradient on the Gram operator).

Coefficients are ordered basis-major, then by subband
``(a, h_J..h_1, v_J..v_1, d_J..d_1)``, then in raster order, so that every
subband occupies a contiguous slice.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg
from scipy.linalg import cho_factor, cho_solve

SQRT2 = np.sqrt(2.0)
_SQRT3 = np.sqrt(3.0)

# Reconstruction lowpass taps, sum = sqrt(2), sum of squares = 1.
# daub8 and sym8 were obtained by spectral factorization of the Daubechies
# polynomial at 50 significant digits (minimum-phase and least-asymmetric
# root selections respectively).
FILTER_TAPS: dict[str, np.ndarray] = {
    "haar": np.array([1.0, 1.0]) / SQRT2,
    "daub4": np.array([1.0 + _SQRT3, 3.0 + _SQRT3, 3.0 - _SQRT3, 1.0 - _SQRT3]) / (4.0 * SQRT2),
    "daub8": np.array([
        0.2303778133088965008633,
        0.7148465705529156470899,
        0.6308807679298589078817,
        -0.02798376941685985421141,
        -0.1870348117190930840796,
        0.03084138183556076362722,
        0.03288301166688519973541,
        -0.01059740178506903210488,
    ]),
    "sym8": np.array([
        0.03222310060405146787162,
        -0.01260396726203130375392,
        -0.09921954357663353258521,
        0.2978577956053060514029,
        0.8037387518051320808788,
        0.4976186676327749899796,
        -0.02963552764600249176437,
        -0.07576571478950221322775,
    ]),
}

_ALIASES = {
    "db1": "haar", "db2": "daub4", "db4": "daub8", "sym4": "sym8",
    "daubechies4": "daub4", "daubechies8": "daub8", "symmlet8": "sym8",
}


class FrameDimensionError(ValueError):
    """Input length does not match the frame dimensions."""


class FrameSolveError(RuntimeError):
    """Iterative Gram solve did not reach the requested tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class WaveletSpec:
    """Filter family, number of levels and a circular translation.

    ``shift`` translates every basis vector by that many samples along each
    axis (periodically). The "shifted Daubechies" basis is ``daub4`` with
    ``shift=1``.
    """

    family: str = "haar"
    levels: int = 1
    shift: int = 0
    boundary: str = "periodic"

    def __post_init__(self):
        fam = _ALIASES.get(self.family.lower(), self.family.lower())
        if fam not in FILTER_TAPS:
            raise ValueError(f"unknown filter family {self.family!r}; known: {sorted(FILTER_TAPS)}")
        object.__setattr__(self, "family", fam)
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if self.boundary != "periodic":
            raise ValueError("only periodic boundaries are supported")

    @classmethod
    def parse(cls, text: str, levels: int) -> "WaveletSpec":
        """Parse ``"daub4@1"`` style strings (family, optional ``@shift``)."""
        name, _, shift = text.strip().partition("@")
        return cls(name, levels, int(shift) if shift else 0)

    @property
    def lowpass(self) -> np.ndarray:
        return FILTER_TAPS[self.family]

    @property
    def highpass(self) -> np.ndarray:
        h = self.lowpass
        return ((-1.0) ** np.arange(len(h))) * h[::-1]

    def __str__(self):
        return self.family + (f"@{self.shift}" if self.shift else "")


def check_cqf(h: np.ndarray, tol: float = 1e-12) -> bool:
    """True if ``h`` is an orthonormal (conjugate quadrature) lowpass filter."""
    h = np.asarray(h, dtype=float)
    if abs(h @ h - 1.0) > tol or abs(h.sum() - SQRT2) > tol:
        return False
    return all(abs(h[: len(h) - 2 * k] @ h[2 * k:]) <= tol for k in range(1, (len(h) + 1) // 2))


@dataclass
class GroupLayout:
    """Partition of ``{0..K-1}`` into G groups, stored as one label per coefficient."""

    labels: np.ndarray
    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.intp)
        G = int(self.labels.max()) + 1 if self.labels.size else 0
        if not self.names:
            self.names = [f"g{g}" for g in range(G)]
        if len(self.names) != G or np.any(self.sizes == 0):
            raise ValueError("group labels must be 0..G-1 with every group non-empty")

    @classmethod
    def from_sizes(cls, sizes: Sequence[int], names: Sequence[str] | None = None) -> "GroupLayout":
        return cls(np.repeat(np.arange(len(sizes)), sizes), list(names) if names else [])

    @classmethod
    def concatenate(cls, layouts: Sequence["GroupLayout"], prefixes: Sequence[str]) -> "GroupLayout":
        labels, names, offset = [], [], 0
        for lay, pre in zip(layouts, prefixes):
            labels.append(lay.labels + offset)
            names += [pre + n for n in lay.names]
            offset += lay.G
        return cls(np.concatenate(labels), names)

    @property
    def K(self) -> int:
        return self.labels.size

    @property
    def G(self) -> int:
        return len(self.names)

    @cached_property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels)

    @cached_property
    def _index_sets(self) -> list[np.ndarray]:
        order = np.argsort(self.labels, kind="stable")
        return np.split(order, np.cumsum(self.sizes)[:-1])

    def indices(self, g: int) -> np.ndarray:
        return self._index_sets[g]

    def expand(self, per_group: np.ndarray) -> np.ndarray:
        """Broadcast a length-G array to one value per coefficient."""
        return np.asarray(per_group)[self.labels]

    def group_sums(self, values: np.ndarray) -> np.ndarray:
        return np.bincount(self.labels, weights=values, minlength=self.G)

    def power_sums(self, x: np.ndarray, beta: np.ndarray) -> np.ndarray:
        """``sum_{k in S_g} |x_k|^beta_g`` for every group."""
        return self.group_sums(np.abs(x) ** self.expand(beta))


class FrameOperator:
    """Analysis ``F: R^L -> R^K`` and synthesis ``F*: R^K -> R^L``."""

    kind: str = "general"
    shape: tuple[int, ...]
    L: int
    K: int
    mu: float | None = None  # tightness constant, None if not known tight

    @property
    def is_tight(self) -> bool:
        return self.mu is not None

    def _analyze(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _synthesize(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def analyze(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.size != self.L:
            raise FrameDimensionError(f"signal has {y.size} samples, frame expects L={self.L}")
        return self._analyze(y.reshape(self.shape))

    def synthesize(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.size != self.K:
            raise FrameDimensionError(f"got {x.size} coefficients, frame expects K={self.K}")
        return self._synthesize(x.ravel()).ravel()

    def gram(self, y) -> np.ndarray:
        return self.synthesize(self.analyze(y))

    def apply_gram_inverse(self, u, rtol: float = 1e-10, maxiter: int | None = None) -> np.ndarray:
        """Solve ``F*F lam = u``; analytic for tight frames, CG otherwise."""
        u = np.asarray(u, dtype=float).ravel()
        if u.size != self.L:
            raise FrameDimensionError(f"vector has {u.size} entries, frame expects L={self.L}")
        if self.is_tight:
            return u / self.mu
        op = LinearOperator((self.L, self.L), matvec=self.gram, dtype=float)
        lam, _ = cg(op, u, rtol=rtol, atol=0.0, maxiter=maxiter or 10 * self.L)
        unorm = np.linalg.norm(u)
        res = np.linalg.norm(self.gram(lam) - u) / unorm if unorm > 0 else 0.0
        # cg's own stopping rule is on the recursively updated residual
        if res > 10 * rtol:
            raise FrameSolveError("Gram operator solve did not converge", res)
        return lam

    def range_component(self, u) -> np.ndarray:
        """``F (F*F)^-1 u``: the coefficient vector in Ran(F) synthesizing to ``u``."""
        return self.analyze(self.apply_gram_inverse(u))

    def project_nullspace(self, z) -> np.ndarray:
        """Orthogonal projection onto Null(F*) = Ran(F)^perp."""
        z = np.asarray(z, dtype=float).ravel()
        if z.size != self.K:
            raise FrameDimensionError(f"got {z.size} coefficients, frame expects K={self.K}")
        return z - self.range_component(self.synthesize(z))


def analyze(frame: FrameOperator, signal) -> np.ndarray:
    return frame.analyze(signal)


def synthesize(frame: FrameOperator, coeffs) -> np.ndarray:
    return frame.synthesize(coeffs)


def project_nullspace(frame: FrameOperator, z) -> np.ndarray:
    return frame.project_nullspace(z)


def apply_gram_inverse(frame: FrameOperator, u) -> np.ndarray:
    return frame.apply_gram_inverse(u)


def _check_dyadic(shape: tuple[int, ...], levels: int):
    if len(shape) not in (1, 2):
        raise ValueError("only 1-D signals and 2-D images are supported")
    for n in shape:
        if n % (2 ** levels) or n < 2 ** levels:
            raise ValueError(f"dimension {n} is not divisible by 2^{levels}; choose fewer levels")


def periodic_dwt_matrix(h: np.ndarray, n: int) -> np.ndarray:
    """One level of the periodic orthonormal DWT as an ``n x n`` matrix.

    Rows ``0..n/2-1`` are lowpass atoms, rows ``n/2..n-1`` highpass atoms.
    """
    g = ((-1.0) ** np.arange(len(h))) * h[::-1]
    W = np.zeros((n, n))
    half = n // 2
    rows = np.arange(half)
    for j in range(len(h)):
        cols = (2 * rows + j) % n
        np.add.at(W, (rows, cols), h[j])
        np.add.at(W, (rows + half, cols), g[j])
    return W


def _subband_names(ndim: int, levels: int) -> list[str]:
    if ndim == 1:
        return ["a"] + [f"d{j}" for j in range(levels, 0, -1)]
    return ["a"] + [f"{o}{j}" for o in "hvd" for j in range(levels, 0, -1)]


class OrthonormalWavelet(FrameOperator):
    """Separable periodic Mallat DWT; an orthonormal basis (``mu = 1``)."""

    kind = "orthonormal-basis"

    def __init__(self, spec: WaveletSpec, shape: Sequence[int]):
        self.spec = spec
        self.shape = tuple(int(n) for n in shape)
        _check_dyadic(self.shape, spec.levels)
        self.L = self.K = int(np.prod(self.shape))
        self.mu = 1.0
        J = spec.levels
        self._mats = [
            [periodic_dwt_matrix(spec.lowpass, n // 2 ** j) for n in self.shape] for j in range(J)
        ]
        # subband shapes in coefficient order
        if len(self.shape) == 1:
            n = self.shape[0]
            self._bands = [(n >> J,)] + [(n >> j,) for j in range(J, 0, -1)]
        else:
            n0, n1 = self.shape
            self._bands = [(n0 >> J, n1 >> J)] + [(n0 >> j, n1 >> j) for _ in "hvd" for j in range(J, 0, -1)]
        sizes = [int(np.prod(b)) for b in self._bands]
        self.layout = GroupLayout.from_sizes(sizes, _subband_names(len(self.shape), J))
        self._offsets = np.concatenate([[0], np.cumsum(sizes)])

    def _analyze(self, y):
        J = self.spec.levels
        a = y
        if self.spec.shift:
            a = np.roll(a, -self.spec.shift, axis=tuple(range(a.ndim)))
        out = {}
        if a.ndim == 1:
            for j in range(J):
                t = self._mats[j][0] @ a
                half = t.size // 2
                a, out[("d", j + 1)] = t[:half], t[half:]
            parts = [a] + [out[("d", j)] for j in range(J, 0, -1)]
        else:
            for j in range(J):
                A0, A1 = self._mats[j]
                t = A0 @ a @ A1.T
                h0, h1 = t.shape[0] // 2, t.shape[1] // 2
                out[("h", j + 1)] = t[h0:, :h1]
                out[("v", j + 1)] = t[:h0, h1:]
                out[("d", j + 1)] = t[h0:, h1:]
                a = t[:h0, :h1]
            parts = [a] + [out[(o, j)] for o in "hvd" for j in range(J, 0, -1)]
        return np.concatenate([p.ravel() for p in parts])

    def _band(self, x, i):
        return x[self._offsets[i]:self._offsets[i + 1]].reshape(self._bands[i])

    def _synthesize(self, x):
        J = self.spec.levels
        a = self._band(x, 0)
        if len(self.shape) == 1:
            for j in range(J, 0, -1):
                d = self._band(x, 1 + (J - j))
                a = self._mats[j - 1][0].T @ np.concatenate([a, d])
        else:
            for j in range(J, 0, -1):
                k = J - j
                h, v, d = (self._band(x, 1 + k + o * J) for o in range(3))
                t = np.block([[a, v], [h, d]])
                A0, A1 = self._mats[j - 1]
                a = A0.T @ t @ A1
        if self.spec.shift:
            a = np.roll(a, self.spec.shift, axis=tuple(range(a.ndim)))
        return a


class UnionOfBases(FrameOperator):
    """``F = [F_1; ...; F_M]`` for orthonormal bases ``F_m``; tight with ``mu = M``."""

    kind = "union-of-bases"

    def __init__(self, bases: Sequence[FrameOperator]):
        if not bases:
            raise ValueError("need at least one basis")
        shapes = {b.shape for b in bases}
        if len(shapes) != 1:
            raise ValueError("all bases must share the image shape")
        for b in bases:
            if b.K != b.L or b.mu != 1.0:
                raise ValueError("union blocks must be orthonormal bases")
        self.bases = list(bases)
        self.M = len(bases)
        self.shape = bases[0].shape
        self.L = bases[0].L
        self.K = self.M * self.L
        self.mu = float(self.M)

    def block_slice(self, m: int) -> slice:
        return slice(m * self.L, (m + 1) * self.L)

    def _analyze(self, y):
        return np.concatenate([b._analyze(y) for b in self.bases])

    def _synthesize(self, x):
        return sum(b._synthesize(x[self.block_slice(m)]) for m, b in enumerate(self.bases))


class TranslationInvariantWavelet(FrameOperator):
    """Undecimated periodic wavelet transform, each level scaled by 1/sqrt(2) per axis.

    Every subband has L coefficients, K = (3J+1) L in 2-D and (J+1) L in 1-D.
    With the scaling the squared subband responses sum to one at every
    frequency, so ``F*F = I`` exactly (``mu = 1``).
    """

    kind = "translation-invariant"

    def __init__(self, spec: WaveletSpec, shape: Sequence[int]):
        self.spec = spec
        self.shape = tuple(int(n) for n in shape)
        _check_dyadic(self.shape, spec.levels)
        self.L = int(np.prod(self.shape))
        self.mu = 1.0
        J = spec.levels
        h, g = spec.lowpass / SQRT2, spec.highpass / SQRT2

        def responses(n):
            w = 2 * np.pi * np.fft.fftfreq(n)
            lo, hi = [], []
            for j in range(J):
                k = np.arange(len(h)) * 2 ** j
                e = np.exp(-1j * np.outer(w, k))
                lo.append(e @ h)
                hi.append(e @ g)
            return lo, hi

        if len(self.shape) == 1:
            lo, hi = responses(self.shape[0])
            bands, acc = {}, np.ones(self.shape[0], dtype=complex)
            for j in range(J):
                bands[("d", j + 1)] = acc * hi[j]
                acc = acc * lo[j]
            resp = [acc] + [bands[("d", j)] for j in range(J, 0, -1)]
        else:
            lo0, hi0 = responses(self.shape[0])
            lo1, hi1 = responses(self.shape[1])
            bands, acc = {}, np.ones(self.shape, dtype=complex)
            for j in range(J):
                bands[("h", j + 1)] = acc * np.outer(hi0[j], lo1[j])
                bands[("v", j + 1)] = acc * np.outer(lo0[j], hi1[j])
                bands[("d", j + 1)] = acc * np.outer(hi0[j], hi1[j])
                acc = acc * np.outer(lo0[j], lo1[j])
            resp = [acc] + [bands[(o, j)] for o in "hvd" for j in range(J, 0, -1)]
        self._resp = np.stack(resp)
        self._axes = tuple(range(1, len(self.shape) + 1))
        S = len(resp)
        self.K = S * self.L
        self.layout = GroupLayout.from_sizes([self.L] * S, _subband_names(len(self.shape), J))

    def _analyze(self, y):
        Y = np.fft.fftn(y)
        return np.fft.ifftn(Y[None] * self._resp, axes=self._axes).real.ravel()

    def _synthesize(self, x):
        X = np.fft.fftn(x.reshape((-1,) + self.shape), axes=self._axes)
        return np.fft.ifftn((X * self._resp.conj()).sum(axis=0)).real


class MatrixFrame(FrameOperator):
    """Frame given by an explicit ``K x L`` analysis matrix (rows are ``e_k``)."""

    def __init__(self, matrix: np.ndarray, mu: float | None = None):
        self.matrix = np.asarray(matrix, dtype=float)
        self.K, self.L = self.matrix.shape
        if self.K < self.L or np.linalg.matrix_rank(self.matrix) < self.L:
            raise ValueError("analysis matrix must have full column rank")
        self.shape = (self.L,)
        self.mu = mu
        self._chol = None

    def _analyze(self, y):
        return self.matrix @ y

    def apply_gram_inverse(self, u, rtol: float = 1e-10, maxiter: int | None = None) -> np.ndarray:
        """Direct Cholesky solve; the Gram matrix is small and explicit."""
        u = np.asarray(u, dtype=float).ravel()
        if self.is_tight or u.size != self.L:
            return super().apply_gram_inverse(u, rtol, maxiter)
        if self._chol is None:
            self._chol = cho_factor(self.matrix.T @ self.matrix)
        return cho_solve(self._chol, u)

    def _synthesize(self, x):
        return self.matrix.T @ x


def build_orthonormal_basis(spec: WaveletSpec, image_shape) -> tuple[OrthonormalWavelet, GroupLayout]:
    basis = OrthonormalWavelet(spec, image_shape)
    return basis, basis.layout


def build_union_frame(specs: Sequence[WaveletSpec], image_shape) -> tuple[UnionOfBases, GroupLayout]:
    """Union of separable wavelet bases; groups are the subbands of every basis."""
    bases = [OrthonormalWavelet(s, image_shape) for s in specs]
    layout = GroupLayout.concatenate([b.layout for b in bases], [f"b{m + 1}:" for m in range(len(bases))])
    return UnionOfBases(bases), layout


def build_tiwt_frame(spec: WaveletSpec, image_shape) -> tuple[TranslationInvariantWavelet, GroupLayout]:
    frame = TranslationInvariantWavelet(spec, image_shape)
    return frame, frame.layout

"""Run configuration: a flat ``key = value`` file whose entries flags can override."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

from .chain import SamplerConfig
from .frames import (WaveletSpec, build_orthonormal_basis, build_tiwt_frame, build_union_frame)

FRAME_KINDS = ("union", "tiwt", "basis")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    # frame
    frame: str = "union"
    wavelets: str = "daub8,daub4@1"   # comma list of family[@shift]
    levels: int = 1
    shape: str = "64x64"              # synthetic image size for `validate`
    # constraint
    p: float = 2.0
    delta: float = 1e-4
    # sampler
    sampler: int = 2
    iterations: int = 20000
    burn_in: int = 10000
    thin: int = 100
    eta: float | None = None
    sigma_x: float | None = None
    sigma_mode: str = "group"
    sigma_rel: float = 0.05
    adapt: bool = False
    beta0: float = 1.5
    seed: int = 0
    chains: int = 2
    runs: int = 5
    # denoising
    wiener_window: int = 3
    out: str = "out"

    @property
    def image_shape(self) -> tuple[int, ...]:
        try:
            return tuple(int(s) for s in self.shape.lower().split("x"))
        except ValueError:
            raise ConfigError(f"shape must look like 64x64, got {self.shape!r}") from None

    def wavelet_specs(self) -> list[WaveletSpec]:
        try:
            return [WaveletSpec.parse(w, self.levels) for w in self.wavelets.split(",") if w.strip()]
        except ValueError as err:
            raise ConfigError(str(err)) from None

    def validate(self):
        """Reject inconsistent settings before any frame is built or chain run."""
        if self.frame not in FRAME_KINDS:
            raise ConfigError(f"frame must be one of {FRAME_KINDS}")
        specs = self.wavelet_specs()
        if not specs:
            raise ConfigError("no wavelet given")
        if self.frame == "union" and len(specs) < 2:
            raise ConfigError("a union frame needs at least two wavelets")
        if self.frame in ("tiwt", "basis") and len(specs) != 1:
            raise ConfigError(f"frame={self.frame} takes exactly one wavelet")
        if not (1 <= len(self.image_shape) <= 2 and min(self.image_shape) > 0):
            raise ConfigError(f"shape must be 1-D or 2-D with positive sizes, got {self.shape!r}")
        if not (self.p >= 1 or math.isinf(self.p)):
            raise ConfigError("p must be >= 1 (or inf)")
        if self.delta < 0:
            raise ConfigError("delta must be nonnegative")
        if self.sampler == 1:
            if self.p != 2:
                raise ConfigError("sampler 1 needs the l_2 constraint (p = 2); use sampler 2")
            if self.frame != "union":
                raise ConfigError("sampler 1 needs a union-of-bases frame; use sampler 2")
        if self.eta is not None and not 0 < self.eta < self.delta:
            raise ConfigError(f"need 0 < eta < delta, got eta={self.eta}, delta={self.delta}")
        if self.chains < 1 or self.runs < 1:
            raise ConfigError("chains and runs must be positive")
        try:
            self.sampler_config().validate()
        except ValueError as err:
            raise ConfigError(str(err)) from None
        return self

    def sampler_config(self) -> SamplerConfig:
        return SamplerConfig(
            sampler=self.sampler, iterations=self.iterations, burn_in=self.burn_in, thin=self.thin,
            eta=self.eta, sigma_x=self.sigma_x, sigma_mode=self.sigma_mode, sigma_rel=self.sigma_rel,
            adapt=self.adapt, beta0=self.beta0, seed=self.seed)

    def build_frame(self, shape=None):
        shape = tuple(shape) if shape is not None else self.image_shape
        specs = self.wavelet_specs()
        if self.frame == "union":
            return build_union_frame(specs, shape)
        if self.frame == "tiwt":
            return build_tiwt_frame(specs[0], shape)
        return build_orthonormal_basis(specs[0], shape)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def _convert(name: str, raw: str):
    f = {f.name: f for f in dataclasses.fields(RunConfig)}
    if name not in f:
        raise ConfigError(f"unknown config key {name!r}")
    typ = str(f[name].type)
    raw = raw.strip()
    if raw.lower() in ("none", "") and "None" in typ:
        return None
    try:
        if typ.startswith("bool"):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ.startswith("int"):
            return int(raw)
        if typ.startswith("float"):
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None
    return raw


def parse_config_text(text: str) -> dict:
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, val = line.partition("=")
        if not eq:
            raise ConfigError(f"line {n}: expected key = value")
        key = key.strip().replace("-", "_")
        out[key] = _convert(key, val)
    return out


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the file (if any), then non-``None`` overrides."""
    values = {}
    if path is not None:
        values.update(parse_config_text(Path(path).read_text()))
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = _convert(k, v) if isinstance(v, str) else v
    return RunConfig(**values)

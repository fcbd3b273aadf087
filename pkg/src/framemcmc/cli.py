"""Command-line front end: ``framemcmc {validate,denoise,psrf,add-noise}``.

Every subcommand takes ``--config FILE`` (``key = value`` lines) and flags
that override it, and prints its metrics as JSON on stdout.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .config import ConfigError, RunConfig, load_config
from .experiments import add_noise, denoise, run_validation
from .inference import psrf_table

log = logging.getLogger("framemcmc")

_CONFIG_FLAGS = {
    "frame": str, "wavelets": str, "levels": int, "shape": str, "p": float, "delta": float,
    "sampler": int, "iterations": int, "burn_in": int, "thin": int, "eta": float, "sigma_x": float,
    "sigma_mode": str, "sigma_rel": float, "seed": int, "chains": int, "runs": int,
    "wiener_window": int, "out": str,
}


def _add_config_flags(ap: argparse.ArgumentParser):
    ap.add_argument("--config", help="key = value configuration file")
    for name, typ in _CONFIG_FLAGS.items():
        ap.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None)
    ap.add_argument("--adapt", dest="adapt", action="store_true", default=None,
                    help="tune the coefficient step size during burn-in")


def _config(args) -> RunConfig:
    over = {k: getattr(args, k) for k in list(_CONFIG_FLAGS) + ["adapt"]}
    return load_config(args.config, over).validate()


def _emit(obj, path=None):
    text = json.dumps(obj, indent=2, default=_json_default)
    print(text)
    if path:
        Path(path).write_text(text + "\n")


def _json_default(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(type(v))


def _finite(v: float):
    return v if math.isfinite(v) else str(v)


def cmd_validate(args) -> int:
    cfg = _config(args)
    frame, layout = cfg.build_frame()
    rep = run_validation(frame, layout, cfg.sampler_config(), cfg.runs, cfg.seed, cfg.delta, cfg.p)
    out = rep.as_dict()
    out["config"] = cfg.as_dict()
    _emit(out, args.report)
    return 0


def cmd_denoise(args) -> int:
    cfg = _config(args)
    noisy = io.read_image(args.input)
    ref = io.read_image(args.reference) if args.reference else None
    if ref is not None and ref.shape != noisy.shape:
        raise ConfigError("reference and input images differ in size")
    frame, layout = cfg.build_frame(noisy.shape)
    res = denoise(noisy, frame, layout, cfg.sampler_config(), cfg.delta, cfg.p,
                  np.random.default_rng(cfg.seed), ref, cfg.wiener_window)
    io.write_image(args.output, res.image)
    if args.trace:
        io.write_trace(res.trace, args.trace)
    metrics = {k: _finite(v) if isinstance(v, float) else v for k, v in res.metrics.items()}
    metrics.update(output=str(args.output), beta=res.theta.beta, alpha=res.theta.alpha)
    _emit(metrics, args.report)
    return 0


def cmd_psrf(args) -> int:
    traces = [io.read_trace(p) for p in args.traces]
    cfgs = [{k: t.config.get(k) for k in ("sampler", "delta", "p", "eta")} for t in traces]
    if any(c != cfgs[0] for c in cfgs[1:]) or any(t.group_names != traces[0].group_names for t in traces):
        raise ConfigError("traces come from different configurations")
    burn = args.burn_in if args.burn_in is not None else traces[0].config.get("burn_in", 0)
    table = psrf_table(traces, burn)
    worst = max(table, key=table.get)
    ok = table[worst] <= args.max_psrf
    _emit({"psrf": table, "max": table[worst], "max_parameter": worst,
           "threshold": args.max_psrf, "converged": ok})
    return 0 if ok else 2


def cmd_add_noise(args) -> int:
    img = io.read_image(args.input)
    rng = np.random.default_rng(args.seed)
    noisy = add_noise(img, args.p, args.radius, rng)
    stored = np.clip(np.rint(noisy), 0, 255)
    io.write_image(args.output, stored)
    # clamping and rounding move the stored image slightly off the drawn noise
    diff = (stored - img).ravel()
    norm = float(np.abs(diff).max() if math.isinf(args.p) else np.sum(np.abs(diff) ** args.p) ** (1 / args.p))
    _emit({"output": str(args.output), "p": _finite(args.p), "radius": args.radius,
           "stored_noise_norm": norm})
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="framemcmc", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="synthetic hyperparameter recovery (NMSE per group)")
    _add_config_flags(v)
    v.add_argument("--report", help="also write the JSON report here")
    v.set_defaults(func=cmd_validate)

    d = sub.add_parser("denoise", help="MMSE denoising of a PGM image")
    _add_config_flags(d)
    d.add_argument("input")
    d.add_argument("output")
    d.add_argument("--reference", help="clean image for SNR / SSIM")
    d.add_argument("--trace", help="write the chain trace under this base path")
    d.add_argument("--report")
    d.set_defaults(func=cmd_denoise)

    s = sub.add_parser("psrf", help="Gelman-Rubin diagnostic over saved traces")
    s.add_argument("traces", nargs="+", help="trace base paths (without extension)")
    s.add_argument("--burn-in", type=int, default=None, help="defaults to the burn-in stored in the trace")
    s.add_argument("--max-psrf", type=float, default=1.2)
    s.set_defaults(func=cmd_psrf)

    n = sub.add_parser("add-noise", help="add noise drawn uniformly on an l_p ball")
    n.add_argument("input")
    n.add_argument("output")
    n.add_argument("--p", type=float, default=math.inf)
    n.add_argument("--radius", type=float, default=30.0)
    n.add_argument("--seed", type=int, default=0)
    n.set_defaults(func=cmd_add_noise)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, io.PGMFormatError, io.TraceFormatError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

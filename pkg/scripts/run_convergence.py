"""Parallel chains on one synthetic observation; prints the PSRF of every hyperparameter.

    python scripts/run_convergence.py --size 16 --chains 2 --iterations 20000 --sampler 2
"""
import argparse

import numpy as np

from framemcmc.chain import SamplerConfig
from framemcmc.experiments import draw_hyperparams, run_convergence, synthetic_problem
from framemcmc.frames import WaveletSpec, build_union_frame


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=16)
    ap.add_argument("--chains", type=int, default=2)
    ap.add_argument("--iterations", type=int, default=20000)
    ap.add_argument("--sampler", type=int, choices=(1, 2), default=2)
    ap.add_argument("--delta", type=float, default=1e-4)
    ap.add_argument("--eta-rel", type=float, default=1e-3)
    ap.add_argument("--sigma-rel", type=float, default=0.05)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    frame, layout = build_union_frame([WaveletSpec("daub8", 1), WaveletSpec("daub4", 1, shift=1)],
                                      (args.size, args.size))
    rng = np.random.default_rng(args.seed)
    theta = draw_hyperparams(layout.G, rng)
    _, obs = synthetic_problem(frame, layout, theta, rng, args.delta)
    cfg = SamplerConfig(sampler=args.sampler, iterations=args.iterations, burn_in=args.iterations // 2,
                        thin=100, eta=args.eta_rel * args.delta, sigma_mode="group", sigma_rel=args.sigma_rel)
    traces, table = run_convergence(frame, layout, cfg, obs, range(args.seed + 1, args.seed + 1 + args.chains))
    for name, r in table.items():
        print(f"{name:16s} {r:7.3f}")
    worst = max(table, key=table.get)
    print(f"max PSRF {table[worst]:.3f} ({worst}); acceptance "
          + ", ".join(f"{t.acceptance_rate(cfg.burn_in):.3f}" for t in traces))


if __name__ == "__main__":
    main()

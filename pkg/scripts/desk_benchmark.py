"""Train the desk benchmark (ring Z=6, 8-Gaussian ring) and report mixture quality per seed.

    python scripts/desk_benchmark.py --seeds 1000-1009 [--radius 2] [--size 6]
"""

import argparse
import json

from lipiring.experiments import HELD_OUT_SEEDS, desk_config, summarize


def seed_range(text):
    lo, _, hi = text.partition("-")
    return range(int(lo), int(hi or lo) + 1)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seeds", type=seed_range, default=HELD_OUT_SEEDS)
    parser.add_argument("--size", type=int, default=6)
    parser.add_argument("--radius", type=int, default=1)
    parser.add_argument("--generations", type=int, default=300)
    args = parser.parse_args()
    passed = 0
    for seed in args.seeds:
        cfg = desk_config(seed, generations=args.generations,
                          topology={"kind": "ring", "size": args.size, "radius": args.radius})
        r = summarize(cfg)
        ok = r.quality.passes() and r.quality.tvd < 0.3
        passed += ok
        mid = args.generations // 2
        print(json.dumps({
            "seed": seed, "modes": r.quality.covered_modes,
            "high_quality": round(r.quality.high_quality_fraction, 3), "tvd": round(r.quality.tvd, 3),
            "mixture_frechet": round(r.mixture_fitness, 5),
            f"l2_gen{mid}": round(r.diversity.get(mid, float("nan")), 3),
            f"l2_gen{args.generations}": round(r.diversity[args.generations], 3),
            "seconds": round(r.seconds, 1), "pass": ok,
        }), flush=True)
    print(f"{passed}/{len(args.seeds)} seeds cover >= 6 modes with high-quality fraction >= 0.7 and TVD < 0.3")


if __name__ == "__main__":
    main()

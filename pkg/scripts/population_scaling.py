"""Median final mixture Fréchet score over seeds as the ring grows through Z = 2, 4, 6, 9.

    python scripts/population_scaling.py [--seeds 1000-1009]
"""

import argparse
import json
import statistics

from desk_benchmark import seed_range
from lipiring.experiments import HELD_OUT_SEEDS, desk_config, summarize


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seeds", type=seed_range, default=HELD_OUT_SEEDS)
    parser.add_argument("--sizes", type=int, nargs="+", default=[2, 4, 6, 9])
    args = parser.parse_args()
    for z in args.sizes:
        scores = [summarize(desk_config(s, topology={"kind": "ring", "size": z, "radius": 1})).mixture_fitness
                  for s in args.seeds]
        print(json.dumps({"size": z, "median_frechet": statistics.median(scores),
                          "per_seed": [round(x, 5) for x in scores]}), flush=True)


if __name__ == "__main__":
    main()

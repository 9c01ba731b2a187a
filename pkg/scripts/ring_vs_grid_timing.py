"""Time grid 3x3 against ring Z=9 r=1 through the CLI and compare the runs.

    python scripts/ring_vs_grid_timing.py --out runs/timing [--generations 30] [--repeats 5]

Both runs use the desk networks and data, the async execution mode and the same
generation count; only the neighborhood size differs (s=5 vs s=3).
"""

import argparse
import json
import statistics
from pathlib import Path

from lipiring import cli
from lipiring.config import dump_config
from lipiring.experiments import desk_config

TOPOLOGIES = {
    "ring9r1": {"kind": "ring", "size": 9, "radius": 1},
    "grid3x3": {"kind": "grid", "rows": 3, "cols": 3},
}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--generations", type=int, default=30)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    totals = {name: [] for name in TOPOLOGIES}
    for rep in range(args.repeats):
        for name, topo in TOPOLOGIES.items():
            cfg = desk_config(0, topology=topo, generations=args.generations, execution_mode="async")
            cfg_path = args.out / f"{name}.yaml"
            cfg_path.write_text(dump_config(cfg))
            run = args.out / f"{name}-{rep}"
            if cli.cmd_train(cfg_path, run) != 0:
                raise SystemExit(f"run {run} failed; see {run / 'INCOMPLETE'}")
            totals[name].append(cli.summarize_run(run)["total_ms"])
    report = cli.cmd_compare([args.out / f"{name}-0" for name in TOPOLOGIES])
    print(cli.format_report(report))
    ring, grid = (statistics.median(totals[n]) for n in TOPOLOGIES)
    print(json.dumps({"median_ms": {"ring9r1": ring, "grid3x3": grid},
                      "grid_vs_ring": cli.format_relative(cli.relative_time(grid, ring))}))


if __name__ == "__main__":
    main()

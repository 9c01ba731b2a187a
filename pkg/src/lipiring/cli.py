"""Command line entry point: ``lipiring train | compare | inspect-checkpoint``.

A training run directory holds:

``config.yaml``          effective configuration
``metrics.jsonl``        one record per cell per generation (schema below)
``timing.jsonl``         wall-clock milliseconds per record
``frechet_median.csv``   per-generation median and best Fréchet score
``mixture.json``         best cell's generators and mixture weights
``checkpoint.bin``       final population
``INCOMPLETE``           present only if the run failed; holds the error

Metrics record fields (schema_version 1): run_id, generation, cell,
wall_clock_ms, best_fitness, frechet, tvd, mean_l2_diversity, learning_rate.
``wall_clock_ms`` is null in sequential mode so that seeded runs produce
byte-identical files; the timings are in ``timing.jsonl`` for both modes.
``best_fitness`` is null for the generation-0 initialization records and
``tvd`` is null when the data has no known modes.
"""

from __future__ import annotations

import argparse
import json
import math
import statistics
import sys
from collections import defaultdict
from pathlib import Path

from . import checkpoint as ckpt
from .config import ConfigError, ExecutionMode, dump_config, parse_config
from .mixture import MixtureModel
from .orchestrator import METRICS_SCHEMA_VERSION, run_training

RECORD_FIELDS = ("schema_version", "run_id", "generation", "cell", "wall_clock_ms", "best_fitness",
                 "frechet", "tvd", "mean_l2_diversity", "learning_rate")
_NULLABLE = {"wall_clock_ms", "best_fitness", "tvd"}


class RunError(RuntimeError):
    pass


def validate_record(record: dict) -> None:
    if set(record) != set(RECORD_FIELDS):
        raise RunError(f"record fields {sorted(record)} do not match the metrics schema")
    if record["schema_version"] != METRICS_SCHEMA_VERSION:
        raise RunError(f"unsupported metrics schema version {record['schema_version']}")
    for key in ("generation", "cell"):
        if not isinstance(record[key], int) or record[key] < 0:
            raise RunError(f"{key} must be a non-negative integer")
    for key in RECORD_FIELDS[4:]:
        value = record[key]
        if value is None and key in _NULLABLE:
            continue
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            raise RunError(f"{key} must be a finite number, got {value!r}")


class JsonlWriter:
    """Appends whole lines with a single write and flush each."""

    def __init__(self, path: Path, append: bool = False):
        self._fh = open(path, "a" if append else "w", encoding="utf-8")

    def write(self, record: dict) -> None:
        self._fh.write(json.dumps(record) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def _write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)


def mixture_to_json(m: MixtureModel) -> dict:
    return {
        "cell": m.cell,
        "fitness": m.fitness,
        "weights": m.weights.tolist(),
        "generators": [
            {
                "learning_rate": g.learning_rate,
                "layers": [[s.input_dim, s.output_dim, s.activation.value] for s in g.network.layers],
                "params": g.params.tolist(),
            }
            for g in m.generators
        ],
    }


def median_frechet_rows(records) -> list[tuple[int, float, float]]:
    by_gen = defaultdict(list)
    for r in records:
        by_gen[r["generation"]].append(r["frechet"])
    return [(g, statistics.median(v), min(v)) for g, v in sorted(by_gen.items())]


def cmd_train(config_path, out_dir, seed=None, mode=None, resume=None, checkpoint_every=0) -> int:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    marker = out / "INCOMPLETE"
    marker.write_text("run in progress\n")
    writers = []
    try:
        population = None
        if resume is not None:
            population, cfg = ckpt.checkpoint_load(resume)
            if config_path is not None:
                cfg = _compatible(parse_config(config_path), cfg)
        else:
            cfg = parse_config(config_path)
        if seed is not None:
            cfg = cfg.replace(seed=seed)
        if mode is not None:
            cfg = cfg.replace(execution_mode=mode)
        _write_text(out / "config.yaml", dump_config(cfg))

        append = resume is not None
        metrics = JsonlWriter(out / "metrics.jsonl", append)
        timings = JsonlWriter(out / "timing.jsonl", append)
        writers += [metrics, timings]

        def sink(record: dict) -> None:
            validate_record(record)
            metrics.write(record)

        def on_generation(pop) -> None:
            if checkpoint_every and pop.generation % checkpoint_every == 0:
                ckpt.checkpoint_save(pop, cfg, out / f"checkpoint-{pop.generation:05d}.bin")

        pop, mixture, log = run_training(cfg, population, on_record=sink, on_generation=on_generation)
        for t in log.timings:
            timings.write(t)
        for w in writers:
            w.close()
        writers.clear()

        records = read_jsonl(out / "metrics.jsonl")
        rows = median_frechet_rows(records)
        lines = ["generation,median_frechet,best_frechet"] + [f"{g},{m!r},{b!r}" for g, m, b in rows]
        _write_text(out / "frechet_median.csv", "\n".join(lines) + "\n")
        _write_text(out / "mixture.json", json.dumps(mixture_to_json(mixture)))
        ckpt.checkpoint_save(pop, cfg, out / "checkpoint.bin")
    except Exception as exc:  # noqa: BLE001 - any failure leaves a flagged, partial run
        for w in writers:
            w.close()
        marker.write_text(f"{type(exc).__name__}: {exc}\n")
        print(f"train failed: {exc}", file=sys.stderr)
        return 1
    marker.unlink()
    return 0


def _compatible(new, old):
    if (new.topology != old.topology or new.network != old.network or new.data != old.data
            or new.seed != old.seed):
        raise ConfigError("resume config must keep the checkpoint's topology, network, data and seed")
    return new


def read_jsonl(path: Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def summarize_run(run_dir) -> dict:
    run_dir = Path(run_dir)
    metrics_path = run_dir / "metrics.jsonl"
    if not metrics_path.exists():
        raise RunError(f"run {run_dir}: missing metrics file {metrics_path.name}")
    records = read_jsonl(metrics_path)
    if not records:
        raise RunError(f"run {run_dir}: metrics file is empty")
    for r in records:
        if r.get("schema_version") != METRICS_SCHEMA_VERSION:
            raise RunError(f"run {run_dir}: incompatible metrics schema {r.get('schema_version')!r}")
    times = [r for r in records if r.get("wall_clock_ms") is not None]
    if not times and (run_dir / "timing.jsonl").exists():
        times = read_jsonl(run_dir / "timing.jsonl")
    if not times:
        raise RunError(f"run {run_dir}: no wall-clock data")
    gen_end = defaultdict(float)
    for r in times:
        gen_end[r["generation"]] = max(gen_end[r["generation"]], r["wall_clock_ms"])
    ends = [gen_end[g] for g in sorted(gen_end)]
    durations = [b - a for a, b in zip(ends[:-1], ends[1:])] or ends
    last = max(r["generation"] for r in records)
    final = [r for r in records if r["generation"] == last]
    tvds = [r["tvd"] for r in final if r["tvd"] is not None]
    return {
        "run": str(run_dir),
        "run_id": records[0]["run_id"],
        "generations": last,
        "total_ms": max(ends),
        "generation_ms_mean": statistics.fmean(durations),
        "generation_ms_std": statistics.pstdev(durations),
        "final_median_frechet": statistics.median(r["frechet"] for r in final),
        "final_best_frechet": min(r["frechet"] for r in final),
        "final_median_tvd": statistics.median(tvds) if tvds else None,
        "final_mean_l2": statistics.fmean(r["mean_l2_diversity"] for r in final),
    }


def relative_time(total: float, baseline: float) -> float:
    """Percent by which ``total`` exceeds ``baseline``."""
    return 100.0 * (total - baseline) / baseline


def format_relative(pct: float) -> str:
    if pct < 0:
        return f"{-pct:.1f}% shorter"
    return f"+{pct:.1f}% longer"


def cmd_compare(run_dirs) -> dict:
    if len(run_dirs) < 2:
        raise RunError("compare needs at least two run directories")
    rows = [summarize_run(d) for d in run_dirs]
    base = rows[0]["total_ms"]
    for row in rows:
        row["time_vs_first_pct"] = relative_time(row["total_ms"], base)
        row["time_vs_first"] = format_relative(row["time_vs_first_pct"])
    return {"baseline": rows[0]["run"], "runs": rows}


def format_report(report: dict) -> str:
    def num(v, fmt=".4g"):
        return "-" if v is None else format(v, fmt)

    head = f"{'run':<28} {'gens':>5} {'total s':>9} {'gen ms (mean±std)':>20} " \
           f"{'med FD':>9} {'best FD':>9} {'TVD':>7} {'L2':>8}  vs first"
    lines = [head, "-" * len(head)]
    for r in report["runs"]:
        lines.append(
            f"{r['run_id']:<28} {r['generations']:>5} {r['total_ms'] / 1000:>9.2f} "
            f"{r['generation_ms_mean']:>10.1f}±{r['generation_ms_std']:<9.1f} "
            f"{num(r['final_median_frechet']):>9} {num(r['final_best_frechet']):>9} "
            f"{num(r['final_median_tvd'], '.3f'):>7} {num(r['final_mean_l2'], '.3f'):>8}  {r['time_vs_first']}"
        )
    return "\n".join(lines)


def cmd_inspect(path) -> dict:
    return ckpt.describe(path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lipiring", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="run one training experiment")
    train.add_argument("--config", type=Path, help="YAML config (required unless --resume)")
    train.add_argument("--out", type=Path, required=True, help="output directory")
    train.add_argument("--seed", type=int)
    train.add_argument("--mode", choices=["seq", "async"])
    train.add_argument("--resume", type=Path, help="continue from this checkpoint")
    train.add_argument("--checkpoint-every", type=int, default=0, metavar="K",
                       help="also write checkpoint-<gen>.bin every K generations")

    compare = sub.add_parser("compare", help="tabulate and compare finished runs")
    compare.add_argument("runs", nargs="+", type=Path)
    compare.add_argument("--json", action="store_true", help="print the report as JSON")

    inspect = sub.add_parser("inspect-checkpoint", help="summarize a checkpoint file")
    inspect.add_argument("file", type=Path)
    return parser


_MODES = {"seq": ExecutionMode.SEQUENTIAL.value, "async": ExecutionMode.ASYNC.value}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "train":
        if args.config is None and args.resume is None:
            print("train needs --config or --resume", file=sys.stderr)
            return 2
        mode = _MODES[args.mode] if args.mode else None
        return cmd_train(args.config, args.out, args.seed, mode, args.resume, args.checkpoint_every)
    try:
        if args.command == "compare":
            report = cmd_compare(args.runs)
            print(json.dumps(report, indent=2) if args.json else format_report(report))
        else:
            print(json.dumps(cmd_inspect(args.file), indent=2))
    except (RunError, ckpt.CheckpointError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

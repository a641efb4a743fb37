"""Batch command-line front end.

Every command reads a YAML (or JSON) run configuration; the manifest lists
one price file per index::

    manifest:
      - {id: DJI, path: dji.csv, region: NorthAmerica}
      - {id: DAX, path: dax.csv, region: Europe, value_column: open}
    format: {time_column: date, value_column: close, time_format: date}
    estimator: {k: 4, markov_candidates: [1, 2, 3, 4, 5], transform: increment}
    window: {length: 2016, step: 21}
    blocks: {min_samples: 100}
    output: {dir: out}

Relative paths resolve against the config file's directory. Outputs are
machine readable (CSV/JSON) only.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import yaml

from .errors import BlockTooShort, ConfigError, DirankError, PairError, WindowTooLong
from .estimator import EstimatorConfig
from .graph import (CausalGraph, aggregate_regions, assemble_graph, build_graph, estimate_alignment,
                    net_flow, ordered_pairs, pagerank_rank)
from .ingest import RawSeries, Region, SeriesFormat, align_pair, load_series
from .synth import SynthSpec, as_raw_series, generate, synthetic_keys

log = logging.getLogger("dirank")

_FORMAT_KEYS = ("time_column", "value_column", "delimiter", "time_format", "region_column")
_EST_KEYS = ("k", "markov_candidates", "transform", "jitter_seed", "prediction_mode",
             "order_tolerance", "fixed_order", "clamp_negative")


@dataclass
class RunConfig:
    manifest: list[dict]
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    fmt: SeriesFormat = field(default_factory=SeriesFormat)
    window_length: int | None = None
    window_step: int = 21
    min_block_samples: int = 100
    damping: float = 0.85
    out_dir: Path = Path("out")
    n_jobs: int = 1
    base_dir: Path = Path(".")

    def __post_init__(self):
        if not self.manifest:
            raise ConfigError("manifest must list at least one series")
        floor = 10 * self.estimator.max_order
        if self.window_length is not None and self.window_length <= floor:
            raise ConfigError(f"window length must exceed 10 x largest Markov order ({floor})")
        if self.window_step < 1:
            raise ConfigError("window step must be >= 1")

    @classmethod
    def from_mapping(cls, data: dict, base_dir: Path = Path(".")) -> "RunConfig":
        if not isinstance(data, dict) or "manifest" not in data:
            raise ConfigError("config needs a 'manifest' list")
        manifest = data["manifest"]
        if isinstance(manifest, dict):  # {id: {path:, region:}} form
            manifest = [{"id": k, **v} for k, v in manifest.items()]
        for entry in manifest:
            if "id" not in entry or "path" not in entry:
                raise ConfigError(f"manifest entry needs id and path: {entry}")
        fmt = SeriesFormat(**{k: v for k, v in (data.get("format") or {}).items() if k in _FORMAT_KEYS})
        est_raw = data.get("estimator") or {}
        unknown = set(est_raw) - set(_EST_KEYS)
        if unknown:
            raise ConfigError(f"unknown estimator keys {sorted(unknown)}")
        est = EstimatorConfig(**{k: tuple(v) if k == "markov_candidates" else v for k, v in est_raw.items()})
        window = data.get("window") or {}
        out = data.get("output") or {}
        return cls(
            manifest=list(manifest),
            estimator=est,
            fmt=fmt,
            window_length=window.get("length"),
            window_step=int(window.get("step", 21)),
            min_block_samples=int((data.get("blocks") or {}).get("min_samples", 100)),
            damping=float((data.get("pagerank") or {}).get("damping", 0.85)),
            out_dir=base_dir / out.get("dir", "out"),
            n_jobs=int(data.get("n_jobs", 1)),
            base_dir=base_dir,
        )

    @classmethod
    def load(cls, path: Path | str) -> "RunConfig":
        path = Path(path)
        try:
            data = yaml.safe_load(path.read_text())
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_mapping(data, path.parent)

    def load_series(self) -> list[RawSeries]:
        out = []
        for entry in self.manifest:
            fmt = replace(self.fmt, **{k: entry[k] for k in _FORMAT_KEYS if k in entry})
            out.append(load_series(self.base_dir / entry["path"], fmt, id=str(entry["id"]),
                                   region=entry.get("region")))
        return out


def _write_rows(path: Path, header: Sequence[str], rows) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format(v, ".17g") if isinstance(v, float) else v for v in row])
    return path


def _key(t) -> str:
    return t.isoformat() if hasattr(t, "isoformat") else str(t)


def _edge_rows(g: CausalGraph):
    for i, j in ordered_pairs(g.size):
        yield g.labels[i], g.labels[j], float(g.weights[i, j]), int(g.orders[i, j]), int(g.n_effective[i, j])


def write_ranking(g: CausalGraph, out: Path, damping: float, stem: str = "ranking") -> Path:
    nf = net_flow(g)
    pr = pagerank_rank(g, damping)
    rows = [(lab, score, rank, float(pr.scores[g.labels.index(lab)]), pr.rank_of(lab))
            for lab, score, rank in nf.rows()]
    return _write_rows(out / f"{stem}.csv", ["id", "net_flow", "rank", "pagerank", "pagerank_rank"], rows)


def cmd_rank(cfg: RunConfig) -> list[Path]:
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    g = build_graph(cfg.load_series(), cfg.estimator, cfg.n_jobs)
    files = list(g.save(out / "graph"))
    files.append(write_ranking(g, out, cfg.damping))
    files.append(_write_rows(out / "orders.csv", ["source", "target", "di", "order", "n_effective"], _edge_rows(g)))
    return files


def cmd_heatmap(cfg: RunConfig) -> list[Path]:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    g = build_graph(cfg.load_series(), cfg.estimator, cfg.n_jobs)
    return list(g.save(cfg.out_dir / "heatmap"))


def cmd_regions(cfg: RunConfig) -> list[Path]:
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    g = build_graph(cfg.load_series(), cfg.estimator, cfg.n_jobs)
    rg = aggregate_regions(g)
    files = list(g.save(out / "graph")) + list(rg.save(out / "regions"))
    files.append(write_ranking(rg, out, cfg.damping, "region_ranking"))
    return files


def cmd_orders(cfg: RunConfig) -> list[Path]:
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    g = build_graph(cfg.load_series(), cfg.estimator, cfg.n_jobs)
    edges = _write_rows(out / "orders.csv", ["source", "target", "di", "order", "n_effective"], _edge_rows(g))
    counts = Counter(int(g.orders[i, j]) for i, j in ordered_pairs(g.size))
    hist = _write_rows(out / "order_counts.csv", ["order", "count"],
                       [(m, counts.get(m, 0)) for m in cfg.estimator.markov_candidates])
    return [edges, hist]


def window_rows(src: RawSeries, dst: RawSeries, length: int, step: int, cfg: EstimatorConfig):
    pa = align_pair(src, dst)
    if length > len(pa):
        raise WindowTooLong(f"window of {length} samples exceeds the {len(pa)} aligned samples")
    for start in range(0, len(pa) - length + 1, step):
        w = pa.slice(start, start + length)
        est = estimate_alignment(w, cfg)
        yield _key(w.common_keys[0]), _key(w.common_keys[-1]), est.value, est.order, est.n_effective


def cmd_window(cfg: RunConfig, src_id: str, dst_id: str) -> list[Path]:
    series = {s.id: s for s in cfg.load_series()}
    for sid in (src_id, dst_id):
        if sid not in series:
            raise ConfigError(f"{sid!r} is not in the manifest")
    length = cfg.window_length
    if length is None:
        raise ConfigError("window length not configured (window.length or --length)")
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    rows = list(window_rows(series[src_id], series[dst_id], length, cfg.window_step, cfg.estimator))
    path = cfg.out_dir / f"window_{src_id}_{dst_id}.csv"
    return [_write_rows(path, ["start", "end", "di", "order", "n_effective"], rows)]


def month_graph(series: Sequence[RawSeries], month: tuple[int, int], cfg: EstimatorConfig,
                min_samples: int) -> CausalGraph:
    """Graph over the samples of one calendar month, each pair on its own calendar."""
    pairs = ordered_pairs(len(series))
    results = []
    for i, j in pairs:
        pa = align_pair(series[i], series[j])
        sub = pa.select([(t.year, t.month) == month for t in pa.common_keys])
        if len(sub) < min_samples:
            raise BlockTooShort(f"{series[i].id}->{series[j].id}: {len(sub)} samples in "
                                f"{month[0]}-{month[1]:02d} (< {min_samples})")
        try:
            results.append(estimate_alignment(sub, cfg))
        except DirankError as exc:
            results.append(exc)
    labels = [s.id for s in series]
    return assemble_graph(labels, pairs, results, cfg, {s.id: s.region.value for s in series})


def cmd_blocks(cfg: RunConfig) -> tuple[list[Path], list[str]]:
    """Per-month net-flow. Returns written files and the list of failed months."""
    series = cfg.load_series()
    months = sorted({(t.year, t.month) for s in series for t in s.timestamps})
    rows, graphs, failed = [], {}, []
    for m in months:
        tag = f"{m[0]}-{m[1]:02d}"
        try:
            g = month_graph(series, m, cfg.estimator, cfg.min_block_samples)
        except (BlockTooShort, PairError) as exc:
            log.warning("block %s skipped: %s", tag, exc)
            failed.append(tag)
            status = "BlockTooShort" if isinstance(exc, BlockTooShort) else "PairError"
            rows.extend((tag, s.id, "", "", status) for s in series)
            continue
        nf = net_flow(g)
        graphs[tag] = g.to_dict()
        rows.extend((tag, lab, score, rank, "ok") for lab, score, rank in nf.rows())
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    table = _write_rows(cfg.out_dir / "blocks.csv", ["month", "id", "net_flow", "rank", "status"], rows)
    js = cfg.out_dir / "blocks.json"
    js.write_text(json.dumps(graphs, indent=2))
    return [table, js], failed


def cmd_synth(network: str, n: int, seed: int, out: Path, freq: str = "day", a: float = 1.0,
              sigma_w: float = 1.0) -> list[Path]:
    """Write synthetic price files plus a ready-to-run config."""
    x = generate(SynthSpec(n, seed, network, a, sigma_w))
    out.mkdir(parents=True, exist_ok=True)
    labels = [str(i + 1) for i in range(len(x))]
    keys = synthetic_keys(n + 1, freq=freq)
    series = as_raw_series(x, labels, Region.OTHER, keys)
    files = []
    for s in series:
        files.append(_write_rows(out / f"X{s.id}.csv", ["date", "close"],
                                 ((_key(t), float(v)) for t, v in zip(s.timestamps, s.values))))
    config = {
        "manifest": [{"id": s.id, "path": f"X{s.id}.csv", "region": "Other"} for s in series],
        "format": {"time_column": "date", "value_column": "close",
                   "time_format": "date" if freq == "day" else "datetime"},
        "output": {"dir": "out"},
    }
    cfg_path = out / "config.yaml"
    cfg_path.write_text(yaml.safe_dump(config, sort_keys=False))
    return files + [cfg_path]


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dirank", description="Rank time series by directed-information net-flow.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", required=True, type=Path)
    common.add_argument("--out", type=Path, help="output directory (overrides config)")
    common.add_argument("--seed", type=int, help="jitter RNG seed")
    common.add_argument("--k", type=int, help="neighbour count")
    common.add_argument("--transform", choices=["increment", "return"])
    common.add_argument("--clamp-negative", action="store_true", help="clip negative DI estimates to 0")
    common.add_argument("--n-jobs", type=int, help="worker processes for the pair sweep")
    common.add_argument("-v", "--verbose", action="store_true")

    sub = p.add_subparsers(dest="command", required=True)
    for name, text in [("rank", "graph, net-flow ranking and per-edge orders"),
                       ("heatmap", "DI matrix only"),
                       ("regions", "region super-node graph"),
                       ("orders", "estimated Markov orders")]:
        sub.add_parser(name, parents=[common], help=text)
    w = sub.add_parser("window", parents=[common], help="sliding-window DI for one pair")
    w.add_argument("--src", required=True)
    w.add_argument("--dst", required=True)
    w.add_argument("--length", type=int)
    w.add_argument("--step", type=int)
    b = sub.add_parser("blocks", parents=[common], help="net-flow per calendar month")
    b.add_argument("--min-samples", type=int)

    s = sub.add_parser("synth", help="write synthetic price files and a config")
    s.add_argument("--network", choices=["paper_test", "gaussian_lag", "iid_pair"], default="paper_test")
    s.add_argument("--n", type=int, default=2000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--a", type=float, default=1.0)
    s.add_argument("--sigma-w", type=float, default=1.0)
    s.add_argument("--freq", choices=["day", "minute"], default="day")
    s.add_argument("--out", type=Path, required=True)
    return p


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    est = {}
    if args.seed is not None:
        est["jitter_seed"] = args.seed
    if args.k is not None:
        est["k"] = args.k
    if args.transform:
        est["transform"] = args.transform
    if args.clamp_negative:
        est["clamp_negative"] = True
    changes = {"estimator": replace(cfg.estimator, **est)} if est else {}
    if args.out is not None:
        changes["out_dir"] = args.out
    if args.n_jobs is not None:
        changes["n_jobs"] = args.n_jobs
    if getattr(args, "length", None) is not None:
        changes["window_length"] = args.length
    if getattr(args, "step", None) is not None:
        changes["window_step"] = args.step
    if getattr(args, "min_samples", None) is not None:
        changes["min_block_samples"] = args.min_samples
    return replace(cfg, **changes) if changes else cfg


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        if args.command == "synth":
            files = cmd_synth(args.network, args.n, args.seed, args.out, args.freq, args.a, args.sigma_w)
            failed = []
        else:
            cfg = _apply_overrides(RunConfig.load(args.config), args)
            failed = []
            if args.command == "rank":
                files = cmd_rank(cfg)
            elif args.command == "heatmap":
                files = cmd_heatmap(cfg)
            elif args.command == "regions":
                files = cmd_regions(cfg)
            elif args.command == "orders":
                files = cmd_orders(cfg)
            elif args.command == "window":
                files = cmd_window(cfg, args.src, args.dst)
            else:
                files, failed = cmd_blocks(cfg)
    except (DirankError, OSError, ValueError) as exc:
        print(f"dirank: error: {exc}", file=sys.stderr)
        return 2
    for f in files:
        print(f)
    if failed:
        print(f"dirank: {len(failed)} block(s) failed: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: load or generate a graph, run one survey, write results.

Example::

    tripoll --input graph.edges --survey count --ranks 4 --stats run.stats
    tripoll --generate rmat --scale 10 --survey degree-triples --output deg.csv
    tripoll --input graph.edges --graph-stats
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from .analyses import SURVEYS, MetadataError, close_time_marginal, run_surveys, snapshot_to_csv
from .comm import DEFAULT_FLUSH_THRESHOLD, CommError
from .containers import DEFAULT_CACHE_CAPACITY, snapshot_csv
from .generate import rmat_graph
from .graph import Graph, GraphError, build_dodgr, graph_stats, ingest
from .serialize import SerializationError
from .survey import ALGORITHMS, SurveyError

__all__ = ["RunConfig", "dump_graph_stats", "main", "run", "validate_metadata"]

TIME_UNIT = "same units as the input timestamps"


@dataclass
class RunConfig:
    input_path: str | None = None
    vertex_meta_path: str | None = None
    num_ranks: int = 1
    algorithm: str = "push-pull"
    survey: str = "count"
    flush_threshold_bytes: int = DEFAULT_FLUSH_THRESHOLD
    cache_capacity: int = DEFAULT_CACHE_CAPACITY
    dedup: str = "first"
    output_path: str | None = None
    stats_path: str | None = None
    generate: str | None = None
    scale: int = 10
    edge_factor: int = 16
    seed: int = 0
    graph_stats_only: bool = False

    def check(self) -> None:
        if (self.input_path is None) == (self.generate is None):
            raise ValueError("give exactly one of --input or --generate")
        if self.generate is not None and self.generate != "rmat":
            raise ValueError(f"unknown generator {self.generate!r}; only 'rmat' is available")
        if self.num_ranks < 1:
            raise ValueError("--ranks must be at least 1")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"--algorithm must be one of {', '.join(ALGORITHMS)}")
        if self.survey not in SURVEYS:
            raise ValueError(f"--survey must be one of {', '.join(SURVEYS)}")
        if self.flush_threshold_bytes < 1:
            raise ValueError("--flush-threshold must be positive")
        if self.cache_capacity < 1:
            raise ValueError("--cache-capacity must be positive")
        if self.dedup not in ("first", "min"):
            raise ValueError("--dedup must be 'first' or 'min'")


def load_graph(cfg: RunConfig) -> Graph:
    if cfg.generate is not None:
        return rmat_graph(cfg.scale, cfg.edge_factor, seed=cfg.seed)
    return ingest(cfg.input_path, cfg.vertex_meta_path, dedup_keep_min_meta=cfg.dedup == "min")


def _edge_name(g: Graph, u: int, v: int) -> str:
    return f"{g.label(u)} {g.label(v)}"


def validate_metadata(g: Graph, survey: str) -> None:
    """Raise :class:`MetadataError` naming the first edge that cannot feed ``survey``."""
    if survey in ("count", "degree-triples"):
        return
    vm = g.vertex_meta
    if survey == "closure-times":
        for (u, v), m in g.edges.items():
            if type(m) is not int and type(m) is not float:
                raise MetadataError(f"closure-times: edge {_edge_name(g, u, v)} has no numeric timestamp (got {m!r})")
        return
    kind = None
    for (u, v), m in g.edges.items():
        for w in (u, v):
            if vm.get(w) is None:
                raise MetadataError(f"{survey}: edge {_edge_name(g, u, v)} has vertex {g.label(w)} without a label")
        if survey != "max-edge-label":
            continue
        if m is None:
            raise MetadataError(f"max-edge-label: edge {_edge_name(g, u, v)} has no label")
        this = "text" if type(m) is str else "number"
        if kind is None:
            kind = this
        elif this != kind:
            raise MetadataError(
                f"max-edge-label: edge {_edge_name(g, u, v)} has a {this} label but earlier edges use {kind} labels"
            )
    if survey == "label-triples":
        kinds = {type(x) is str for x in vm.values() if x is not None}
        if len(kinds) > 1:
            raise MetadataError("label-triples: vertex labels mix text and numbers")


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _format_stats(values: dict) -> str:
    return "".join(f"{k}={v}\n" for k, v in values.items())


def dump_graph_stats(cfg: RunConfig) -> dict[str, int]:
    g = load_graph(cfg)
    parts = build_dodgr(g, cfg.num_ranks, flush_threshold=cfg.flush_threshold_bytes)
    stats = graph_stats(parts)
    out = {k: stats[k] for k in ("vertices", "edges", "d_max", "d_plus_max", "wedges")}
    _write(cfg.stats_path, _format_stats(out))
    return out


def run(cfg: RunConfig) -> int:
    cfg.check()
    if cfg.graph_stats_only:
        dump_graph_stats(cfg)
        return 0
    g = load_graph(cfg)
    validate_metadata(g, cfg.survey)
    parts = build_dodgr(g, cfg.num_ranks, flush_threshold=cfg.flush_threshold_bytes)
    gstats = graph_stats(parts)

    start = time.perf_counter()
    result = run_surveys(
        parts,
        [cfg.survey],
        algorithm=cfg.algorithm,
        cache_capacity=cfg.cache_capacity,
        flush_threshold=cfg.flush_threshold_bytes,
    )
    elapsed = time.perf_counter() - start

    snap = result.snapshots[cfg.survey]
    _write(cfg.output_path, snapshot_to_csv(cfg.survey, snap, TIME_UNIT))
    if cfg.survey == "closure-times" and cfg.output_path is not None:
        marginal = snapshot_csv(close_time_marginal(snap), header="close_bin,count")
        Path(cfg.output_path + ".marginal.csv").write_text(marginal, encoding="utf-8")

    s = result.stats
    values: dict = {
        "algorithm": cfg.algorithm,
        "survey": cfg.survey,
        "ranks": cfg.num_ranks,
        "triangles": result.triangles,
        "wedges": gstats["wedges"],
        "vertices": gstats["vertices"],
        "edges": gstats["edges"],
        "d_max": gstats["d_max"],
        "d_plus_max": gstats["d_plus_max"],
        "wedge_checks": s.wedge_checks_issued,
    }
    for phase, cs in s.phases.items():
        values[f"{phase}_bytes"] = cs.payload_bytes_sent
        values[f"{phase}_messages"] = cs.messages_sent
    total = s.comm
    values["total_bytes"] = total.payload_bytes_sent
    values["total_messages"] = total.messages_sent
    values["pulls"] = s.pulls_performed
    values["wall_time"] = f"{elapsed:.6f}"
    values["wedge_rate"] = f"{gstats['wedges'] / (cfg.num_ranks * elapsed):.3f}" if elapsed > 0 else "0"
    if cfg.stats_path is not None:
        _write(cfg.stats_path, _format_stats(values))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tripoll", description="Distributed-style triangle surveys on a simulated multi-rank engine.")
    src = p.add_argument_group("graph source")
    src.add_argument("--input", dest="input_path", help="edge list: 'u v [edge_meta]' per line")
    src.add_argument("--vertex-meta", dest="vertex_meta_path", help="vertex metadata: 'v meta' per line")
    src.add_argument("--dedup", choices=("first", "min"), default="first", help="metadata kept for repeated edges")
    src.add_argument("--generate", choices=("rmat",), help="generate a graph instead of reading one")
    src.add_argument("--scale", type=int, default=10)
    src.add_argument("--edge-factor", type=int, default=16)
    src.add_argument("--seed", type=int, default=0)
    p.add_argument("--ranks", dest="num_ranks", type=int, default=1)
    p.add_argument("--algorithm", choices=ALGORITHMS, default="push-pull")
    p.add_argument("--survey", choices=SURVEYS, default="count")
    p.add_argument("--flush-threshold", dest="flush_threshold_bytes", type=int, default=DEFAULT_FLUSH_THRESHOLD)
    p.add_argument("--cache-capacity", type=int, default=DEFAULT_CACHE_CAPACITY)
    p.add_argument("--output", dest="output_path", help="snapshot CSV (stdout when omitted)")
    p.add_argument("--stats", dest="stats_path", help="key=value run statistics")
    p.add_argument("--graph-stats", dest="graph_stats_only", action="store_true", help="only report |V|, |E|, d_max, d_plus_max, wedges")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(**vars(args))
    try:
        return run(cfg)
    except (GraphError, MetadataError, SurveyError, CommError, SerializationError, OSError, ValueError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"tripoll: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

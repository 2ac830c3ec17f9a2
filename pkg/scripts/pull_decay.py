"""Average and maximum pulls per rank as the rank count grows.

    python scripts/pull_decay.py --scale 14 --ranks 1 2 4 8 16
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass

from tripoll import build_dodgr, rmat_graph
from tripoll.survey import survey_push_pull


@dataclass
class DecayConfig:
    scale: int = 14
    edge_factor: int = 16
    seed: int = 14
    ranks: tuple[int, ...] = (1, 2, 4, 8)


def run(cfg: DecayConfig) -> list[tuple[int, float, int, int]]:
    g = rmat_graph(cfg.scale, cfg.edge_factor, seed=cfg.seed)
    rows = []
    for n in cfg.ranks:
        stats = survey_push_pull(build_dodgr(g, n), lambda t, s: None)
        rows.append((n, stats.pulls_performed / n, max(stats.pulls_per_rank), stats.pulls_performed))
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--scale", type=int, default=14)
    ap.add_argument("--edge-factor", type=int, default=16)
    ap.add_argument("--seed", type=int, default=14)
    ap.add_argument("--ranks", type=int, nargs="+", default=[1, 2, 4, 8])
    a = ap.parse_args()
    print("ranks\tmean_pulls_per_rank\tmax_pulls_per_rank\ttotal_pulls")
    for n, mean, mx, total in run(DecayConfig(a.scale, a.edge_factor, a.seed, tuple(a.ranks))):
        print(f"{n}\t{mean:.1f}\t{mx}\t{total}")


if __name__ == "__main__":
    main()

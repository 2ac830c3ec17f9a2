"""Push-only vs push-pull communication volume across rank counts.

    python scripts/comm_volume.py --scale 12 --ranks 1 2 4 8
    python scripts/comm_volume.py --hub
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass

from tripoll import build_dodgr, graph_stats, rmat_graph
from tripoll.fixtures import hub_graph
from tripoll.survey import survey_push_only, survey_push_pull


@dataclass
class VolumeConfig:
    scale: int = 12
    edge_factor: int = 16
    seed: int = 0
    ranks: tuple[int, ...] = (1, 2, 4, 8)
    hub: bool = False


def run(cfg: VolumeConfig) -> list[dict]:
    g = hub_graph().graph if cfg.hub else rmat_graph(cfg.scale, cfg.edge_factor, seed=cfg.seed)
    rows = []
    for n in cfg.ranks:
        parts = build_dodgr(g, n)
        push = survey_push_only(parts, lambda t, s: None)
        pp = survey_push_pull(parts, lambda t, s: None)
        assert push.triangles_found == pp.triangles_found
        rows.append(
            {
                "ranks": n,
                "triangles": pp.triangles_found,
                "push_bytes": push.payload_bytes,
                "push_pull_bytes": pp.payload_bytes,
                "ratio": pp.payload_bytes / push.payload_bytes if push.payload_bytes else float("nan"),
                "pulls": pp.pulls_performed,
                "push_time": push.wall_time,
                "push_pull_time": pp.wall_time,
            }
        )
    stats = graph_stats(build_dodgr(g, 1))
    print(f"# graph: |V|={stats['vertices']} |E|={stats['edges']} d_max={stats['d_max']} d+_max={stats['d_plus_max']} wedges={stats['wedges']}")
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--scale", type=int, default=12)
    ap.add_argument("--edge-factor", type=int, default=16)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--ranks", type=int, nargs="+", default=[1, 2, 4, 8])
    ap.add_argument("--hub", action="store_true", help="use the hub fixture instead of R-MAT")
    a = ap.parse_args()
    rows = run(VolumeConfig(a.scale, a.edge_factor, a.seed, tuple(a.ranks), a.hub))
    cols = list(rows[0])
    print("\t".join(cols))
    for r in rows:
        print("\t".join(f"{r[c]:.3f}" if isinstance(r[c], float) else str(r[c]) for c in cols))


if __name__ == "__main__":
    main()

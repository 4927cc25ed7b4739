"""Six-node network example: tree, star and chain conference-key lower bounds."""

from __future__ import annotations

import argparse
import json
from dataclasses import dataclass
from pathlib import Path

from keybounds import netlower as nl


@dataclass
class NetworkConfig:
    graph_path: Path | None = None  # default: the built-in six-node example


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--graph", type=Path, help="graph JSON; defaults to the built-in example")
    cfg = NetworkConfig(p.parse_args().graph)
    g = nl.WeightedGraph.from_json(cfg.graph_path.read_text()) if cfg.graph_path else nl.example_graph()
    value, tree = nl.max_bottleneck_spanning_tree(g)
    rates = g.rate_matrix()
    star, hub = nl.star_rate(rates)
    chain, path = nl.chain_rate(rates)
    print(json.dumps({
        "tree": {"value": value, "edges": tree, "brute_force": nl.brute_force_bottleneck(g)},
        "star": {"value": star, "hub": g.nodes[hub]},
        "chain": {"value": chain, "path": [g.nodes[i] for i in path]},
    }, indent=2))


if __name__ == "__main__":
    main()

"""Regenerate the bundled 333-node test network (tests/data/ego333.txt).

The graph is drawn from a sparse monotone graphon with density close to 0.05,
with labels shuffled and offset so that ingestion has to relabel nodes.
"""
import argparse
from pathlib import Path

import numpy as np

from graphon_em.graphon import AnalyticGraphon
from graphon_em.io import write_edge_list
from graphon_em.netsim import sample_latent, sample_network


def sparse_graphon():
    # g(u) = 0.01 + 0.09 u, overall density 0.055
    return AnalyticGraphon("sparse", lambda u, v: 0.01 + 0.18 * u * v, lambda u: 0.01 + 0.09 * u)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "tests" / "data" / "ego333.txt"))
    ap.add_argument("--n", type=int, default=333)
    ap.add_argument("--seed", type=int, default=20120602)
    args = ap.parse_args(argv)

    ss = np.random.SeedSequence(args.seed).spawn(3)
    u = sample_latent(args.n, ss[0])
    y = sample_network(sparse_graphon(), u, ss[1])
    labels = (np.random.default_rng(ss[2]).permutation(args.n) + 1000).tolist()
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_edge_list(args.out, y, labels, header=[f"synthetic {args.n}-node network, seed {args.seed}"])
    print(f"{args.out}: {args.n} nodes, {int(y.sum() // 2)} edges, {int(np.sum(y.sum(1) == 0))} isolated")


if __name__ == "__main__":
    main()

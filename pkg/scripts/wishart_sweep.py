"""Nonlocal charge of the Bell-type pair mixed with random Wishart states.

The grid covers noise rank K and mixing weight eps at a fixed mode count; the
printed matrix shows Q_raw with K along rows and eps along columns.

    python3 scripts/wishart_sweep.py --m 16 --seed 0 --out results
"""
import argparse
from pathlib import Path

from mixsky.io import write_table
from mixsky.noise import sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=16)
    ap.add_argument("--k", type=int, nargs="+", default=[16, 64, 256, 1024])
    ap.add_argument("--eps", type=float, nargs="+", default=[0.1, 0.3, 0.5, 0.7, 0.9])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=4)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = sweep("wishart", {"m": [args.m], "k": args.k, "eps": args.eps}, seed=args.seed, threads=args.threads)
    write_table(out / f"wishart_m{args.m}.csv", rows, ["m", "k", "eps", "Q_raw", "Q_rounded", "class", "residual", "seed", "error"])
    print("K \\ eps " + " ".join(f"{e:>8}" for e in args.eps))
    for K in args.k:
        cells = [r for r in rows if r["k"] == K]
        print(f"{K:>7} " + " ".join(f"{r['Q_raw']:8.4f}" if not r["error"] else f"{'err':>8}" for r in cells))


if __name__ == "__main__":
    main()

"""Charge of the truncated auxiliary texture versus the number of kept eigenvectors.

For each winding l the auxiliary matrix is cut to its d largest positive
eigenvalues, d = 1 .. l + 2, and the lattice charge of the resulting density
matrix is tabulated.

    python3 scripts/rank_scan.py --m 64 --out results
"""
import argparse
from pathlib import Path

from mixsky.errors import MixskyError
from mixsky.io import write_table
from mixsky.qstate import ModeGrid
from mixsky.synth import SkyrmionSpec, build_single_photon_skyrmion
from mixsky.texture import skyrmion_number, stokes_from_density


def scan(M: int, windings) -> list[dict]:
    grid = ModeGrid(M)
    rows = []
    for l in windings:
        for d in range(1, l + 3):
            row = {"l": l, "d": d, "Q_raw": float("nan"), "Q_rounded": "", "error": ""}
            try:
                rep = skyrmion_number(stokes_from_density(build_single_photon_skyrmion(SkyrmionSpec(l, grid, d=d))))
                row.update(Q_raw=rep.Q_raw, Q_rounded=rep.Q_rounded)
            except MixskyError as exc:
                row["error"] = type(exc).__name__
            rows.append(row)
            print(f"l={l} d={d} Q={row['Q_raw']:.4f} {row['error']}")
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=64)
    ap.add_argument("--lmax", type=int, default=5)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = scan(args.m, range(1, args.lmax + 1))
    write_table(out / "rank_scan.csv", rows, ["l", "d", "Q_raw", "Q_rounded", "error"])


if __name__ == "__main__":
    main()

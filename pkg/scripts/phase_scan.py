"""Charge of the mesh-prepared pair as the relative phase between its two terms varies.

    python3 scripts/phase_scan.py --m 11 --points 256 --out results
"""
import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from mixsky.io import write_table  # noqa: E402
from mixsky.mesh import SCAN_SUBSPACES, default_phase_grid, phase_scan, sign_changes  # noqa: E402
from mixsky.qstate import ModeGrid  # noqa: E402
from mixsky.synth import analytic_modes_q1  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=11)
    ap.add_argument("--points", type=int, default=256)
    ap.add_argument("--threads", type=int, default=4)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    modes = analytic_modes_q1(ModeGrid(args.m), -1)
    phis = default_phase_grid(args.points)

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for subspace in SCAN_SUBSPACES:
        rows = phase_scan(modes, phis, subspace=subspace, threads=args.threads)
        write_table(out / f"phase_scan_{subspace}.csv", rows, ["phi", "Q_raw", "Q_rounded", "class"])
        print(f"{subspace}: values {sorted({r['Q_rounded'] for r in rows})}, {sign_changes(rows)} sign changes")
        ax.plot(phis, [r["Q_raw"] for r in rows], label=subspace)
    ax.set_xlabel("phi")
    ax.set_ylabel("Q")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out / "phase_scan.png", dpi=150)


if __name__ == "__main__":
    main()

"""Static texture figures: s_z as a colour map with in-plane arrows."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .texture import StokesField  # noqa: E402

MAX_ARROWS = 32
STYLES = ("default", "paper")


def _subsample(M: int, limit: int = MAX_ARROWS) -> np.ndarray:
    step = max(1, int(np.ceil(M / limit)))
    return np.arange(0, M, step)


def render_texture(field: StokesField, path, q_raw: float | None = None, style: str = "default", title: str = "") -> Path:
    """Write the texture to ``path``; the suffix picks the format (``.svg`` or ``.png``).

    SVG output is byte-stable for identical input (fixed hash salt, no
    date metadata).
    """
    if style not in STYLES:
        raise ValueError(f"style must be one of {STYLES}")
    path = Path(path)
    x = field.grid.x
    s = np.nan_to_num(field.s)
    ext = (x[0] - field.grid.spacing / 2, x[-1] + field.grid.spacing / 2)
    cmap = "coolwarm" if style == "default" else "RdBu_r"
    with plt.rc_context({"svg.hashsalt": "mixsky", "svg.fonttype": "path", "font.size": 9}):
        fig, ax = plt.subplots(figsize=(4.2, 3.6))
        # rows of the field run along x, columns along x'
        im = ax.imshow(
            np.ma.masked_invalid(field.s[..., 2]).T,
            origin="lower",
            extent=(*ext, *ext),
            cmap=cmap,
            vmin=-1,
            vmax=1,
            interpolation="nearest",
        )
        idx = _subsample(field.grid.M)
        X, XP = np.meshgrid(x[idx], x[idx], indexing="ij")
        ax.quiver(
            X, XP, s[np.ix_(idx, idx)][..., 0], s[np.ix_(idx, idx)][..., 1],
            angles="xy", pivot="mid", color="k", width=0.004,
        )
        ax.set_xlabel("x")
        ax.set_ylabel("x'")
        ax.set_aspect("equal")
        fig.colorbar(im, ax=ax, label="$s_z$")
        label = title
        if q_raw is not None:
            label = (label + "  " if label else "") + f"Q = {q_raw:.3f}"
        if label:
            ax.set_title(label)
        fig.tight_layout()
        meta = {"Date": None} if path.suffix == ".svg" else {}
        fig.savefig(path, metadata=meta)
        plt.close(fig)
    return path

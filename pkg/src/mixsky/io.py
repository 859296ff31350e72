"""On-disk formats: ``.qdm`` density matrices, ``.stokes.csv`` textures, tables and manifests.

Floats in text outputs are written with 17 significant digits so 64-bit
values round-trip exactly.
"""
from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import FormatError, WrongFactorShape
from .qstate import DensityMatrix, FactorLabel, ModeGrid
from .texture import StokesField

QDM_VERSION = 1
STOKES_HEADER = ("i", "j", "x", "xp", "sx", "sy", "sz", "s0", "defined")


def fmt(v) -> str:
    """Text form of a table cell; floats use 17 significant digits."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return "" if v is None else str(v)


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps_json(obj))
    return path


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read JSON from {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# .qdm
# ---------------------------------------------------------------------------

def write_qdm(path, rho: DensityMatrix) -> Path:
    """Write ``rho`` as ``<path>`` (JSON header) plus ``<path>.bin`` (complex128, little-endian).

    Product and mixture storages are densified first.
    """
    path = Path(path)
    data_path = path.with_name(path.name + ".bin")
    header = {
        "version": QDM_VERSION,
        "factors": [{"party": f.party, "kind": f.kind, "dim": f.dim} for f in rho.factors],
        "data_file": data_path.name,
    }
    if rho.storage == "factored":
        header["storage"] = "factored"
        header["rank"] = int(rho.weights.size)
        payload = np.concatenate([rho.weights.astype(complex), rho.vectors.reshape(-1)])
    else:
        header["storage"] = "dense"
        payload = (rho.matrix if rho.storage == "dense" else rho.to_dense()).reshape(-1)
    data_path.write_bytes(np.ascontiguousarray(payload, dtype="<c16").tobytes())
    write_json(path, header)
    return path


def read_qdm(path) -> DensityMatrix:
    path = Path(path)
    header = read_json(path)
    try:
        if header.get("version") != QDM_VERSION:
            raise FormatError(f"unsupported .qdm version {header.get('version')}")
        factors = [FactorLabel(f["party"], f["kind"], int(f["dim"])) for f in header["factors"]]
        raw = np.frombuffer((path.parent / header["data_file"]).read_bytes(), dtype="<c16")
        D = int(np.prod([f.dim for f in factors]))
        if header["storage"] == "dense":
            if raw.size != D * D:
                raise FormatError(f"data file holds {raw.size} values, expected {D * D}")
            return DensityMatrix.dense(factors, raw.reshape(D, D))
        if header["storage"] == "factored":
            k = int(header["rank"])
            if raw.size != k + k * D:
                raise FormatError(f"data file holds {raw.size} values, expected {k + k * D}")
            return DensityMatrix.factored(factors, raw[:k].real, raw[k:].reshape(k, D))
        raise FormatError(f"unknown storage {header['storage']!r}")
    except (KeyError, TypeError, OSError) as exc:
        raise FormatError(f"malformed .qdm file {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# .stokes.csv
# ---------------------------------------------------------------------------

def stokes_csv_text(field: StokesField) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(STOKES_HEADER)
    x = field.grid.x
    M = field.grid.M
    for i in range(M):
        for j in range(M):
            w.writerow(
                [i, j]
                + [fmt(v) for v in (x[i], x[j], field.sx[i, j], field.sy[i, j], field.sz[i, j], field.s0[i, j])]
                + [fmt(bool(field.defined[i, j]))]
            )
    return buf.getvalue()


def write_stokes_csv(path, field: StokesField) -> Path:
    path = Path(path)
    path.write_text(stokes_csv_text(field))
    return path


def read_stokes_csv(path) -> StokesField:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise FormatError(f"cannot read texture file {path}: {exc}") from exc
    if not rows or tuple(rows[0]) != STOKES_HEADER:
        raise FormatError(f"{path} is not a texture file (header {rows[0] if rows else None})")
    body = rows[1:]
    M = int(round(math.sqrt(len(body))))
    if M * M != len(body) or M < 3:
        raise WrongFactorShape(f"{len(body)} texture rows do not form a square grid")
    try:
        arr = np.array([[float(v) for v in r[:8]] for r in body])
    except (ValueError, IndexError) as exc:
        raise FormatError(f"malformed texture row in {path}: {exc}") from exc
    grid = ModeGrid(M, float(np.max(np.abs(arr[:, 2]))))
    shape = (M, M)
    return StokesField.from_components(grid, arr[:, 4].reshape(shape), arr[:, 5].reshape(shape), arr[:, 6].reshape(shape))


# ---------------------------------------------------------------------------
# tables and digests
# ---------------------------------------------------------------------------

def table_text(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def write_table(path, rows: Sequence[dict], columns: Sequence[str]) -> Path:
    path = Path(path)
    path.write_text(table_text(rows, columns))
    return path


def read_table(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def manifest_outputs(paths: Iterable, root) -> list[dict]:
    root = Path(root)
    out = []
    for p in paths:
        p = Path(p)
        out.append({"path": str(p.relative_to(root)) if p.is_relative_to(root) else str(p), "sha256": sha256_file(p)})
    return sorted(out, key=lambda d: d["path"])


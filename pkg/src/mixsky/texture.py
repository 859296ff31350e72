"""Coherence-Stokes fields, skyrmion number and texture classification.

The texture of a single-photon density matrix lives on the (x, x') plane:

    S_x + i S_y = rho_HV(x, x'),   S_z = |rho_HH(x, x')| - |rho_VV(x, x')|

and ``s = S / |S|``. Two estimators of the charge are provided:

``lattice``
    signed solid angles of two spherical triangles per plaquette
    (Berg-Luscher). Exactly integer whenever the boundary is uniform.
``integral``
    central finite differences of ``s`` and a rectangle-rule sum of
    ``s . (d_x s x d_x' s)``. Converges to the continuum integral as the grid
    is refined and, unlike the lattice index, is sensitive to under-resolved
    domain walls and line defects.

Both use the orientation under which the designed textures of
:mod:`mixsky.synth` (``Phi = l * atan2(x', x)``, north pole at the centre)
carry ``Q = -l``; see ``ORIENTATION``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import TooManyUndefinedPoints, WrongFactorShape
from .qstate import MODE, PSEUDOSPIN, DensityMatrix, LabeledState, ModeGrid

# Sign applied to s.(d_x s x d_x' s). With -1 the plane is traversed as
# (x', x), which is the convention that gives Q = -l for the auxiliary
# texture and Q = -1 for the "-" branch of the analytic mode pair.
ORIENTATION = -1.0

UNDEFINED_REL_THRESHOLD = 1e-12
MAX_UNDEFINED_FRACTION = 0.01
BOUNDARY_FLAG_RAD = 0.2
DEGENERATE_TOL = 1e-9

NEEL, ANTINEEL, BLOCH, BUBBLE, UNDETERMINED = "Neel", "AntiNeel", "Bloch", "Bubble", "Undetermined"


@dataclass(frozen=True, eq=False)
class StokesField:
    grid: ModeGrid
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray
    s0: np.ndarray
    s: np.ndarray  # (M, M, 3); NaN where undefined
    defined: np.ndarray

    @classmethod
    def from_components(cls, grid: ModeGrid, sx, sy, sz) -> "StokesField":
        sx, sy, sz = (np.asarray(a, dtype=float) for a in (sx, sy, sz))
        if sx.shape != (grid.M, grid.M):
            raise WrongFactorShape(f"Stokes arrays must be {grid.M}x{grid.M}, got {sx.shape}")
        S = np.stack([sx, sy, sz], axis=-1)
        s0 = np.linalg.norm(S, axis=-1)
        peak = s0.max()
        defined = s0 >= UNDEFINED_REL_THRESHOLD * peak if peak > 0 else np.zeros_like(s0, dtype=bool)
        s = np.full_like(S, np.nan)
        s[defined] = S[defined] / s0[defined, None]
        return cls(grid, sx, sy, sz, s0, s, defined)

    @property
    def undefined_fraction(self) -> float:
        return float(1.0 - self.defined.mean())


def _blocks_to_field(grid: ModeGrid, hh, hv, vv) -> StokesField:
    return StokesField.from_components(grid, hv.real, hv.imag, np.abs(hh) - np.abs(vv))


def _single_photon_layout(rho: DensityMatrix) -> tuple[np.ndarray, int]:
    kinds = [f.kind for f in rho.factors]
    if sorted(kinds) != [MODE, PSEUDOSPIN]:
        raise WrongFactorShape(f"expected one pseudospin and one mode factor, got {[str(f) for f in rho.factors]}")
    M = rho.factors[kinds.index(MODE)].dim
    m = rho.to_dense()
    if kinds[0] == MODE:
        m = m.reshape(M, 2, M, 2).transpose(1, 0, 3, 2).reshape(2 * M, 2 * M)
    return m, M


def stokes_from_density(rho: DensityMatrix, grid: ModeGrid | None = None) -> StokesField:
    """Coherence-Stokes field of a ``2M x 2M`` single pseudospin/mode density matrix."""
    m, M = _single_photon_layout(rho)
    grid = grid or ModeGrid(M)
    if grid.M != M:
        raise WrongFactorShape(f"grid has M={grid.M} but the mode factor has dimension {M}")
    return _blocks_to_field(grid, m[:M, :M], m[:M, M:], m[M:, M:])


def stokes_from_matrix(matrix, grid: ModeGrid) -> StokesField:
    """Same mapping applied to a bare ``2M x 2M`` array (e.g. the auxiliary matrix)."""
    m = np.asarray(matrix)
    M = grid.M
    if m.shape != (2 * M, 2 * M):
        raise WrongFactorShape(f"expected a {2 * M}x{2 * M} matrix, got {m.shape}")
    return _blocks_to_field(grid, m[:M, :M], m[:M, M:], m[M:, M:])


def stokes_from_wavefunction(psi: LabeledState, grid: ModeGrid | None = None) -> StokesField:
    """Texture of a two-photon amplitude ``Psi_{sA sB}(x_A, x_B)`` on the (x_A, x_B) plane."""
    kinds = [f.kind for f in psi.factors]
    if kinds != [PSEUDOSPIN, MODE, PSEUDOSPIN, MODE] or psi.factors[1].dim != psi.factors[3].dim:
        raise WrongFactorShape(
            f"expected factors (sigma_A, x_A, sigma_B, x_B), got {[str(f) for f in psi.factors]}"
        )
    M = psi.factors[1].dim
    grid = grid or ModeGrid(M)
    t = psi.tensor()
    return _blocks_to_field(grid, t[0, :, 0, :], t[0, :, 1, :], t[1, :, 1, :])


# ---------------------------------------------------------------------------
# charge
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TextureReport:
    Q_raw: float
    Q_rounded: int
    integer_residual: float
    method: str
    Q_lattice: float
    Q_integral: float
    undefined_fraction: float
    boundary_deviation: float
    boundary_flag: bool
    degenerate_triangles: int
    helicity: float = float("nan")
    texture_class: str | None = None
    band_fraction: float = float("nan")
    polar_fraction: float = float("nan")

    @property
    def valid(self) -> bool:
        return self.undefined_fraction < MAX_UNDEFINED_FRACTION

    def to_dict(self) -> dict:
        d = asdict(self)
        d["valid"] = self.valid
        return d


def filled_unit_field(field: StokesField) -> np.ndarray:
    """``s`` with undefined points replaced by normalized neighbour averages."""
    frac = field.undefined_fraction
    if frac >= MAX_UNDEFINED_FRACTION:
        raise TooManyUndefinedPoints(f"{frac:.2%} of grid points have S_0 ~ 0")
    s = field.s.copy()
    todo = ~field.defined
    while todo.any():
        known = ~todo
        acc = np.zeros_like(s)
        cnt = np.zeros(todo.shape)
        for axis in (0, 1):
            for shift in (1, -1):
                nb = np.roll(np.where(known[..., None], s, 0.0), shift, axis=axis)
                ok = np.roll(known, shift, axis=axis)
                # np.roll wraps; discard contributions across the grid edge
                edge = [slice(None), slice(None)]
                edge[axis] = 0 if shift == 1 else -1
                ok[tuple(edge)] = False
                acc += np.where(ok[..., None], nb, 0.0)
                cnt += ok
        fill = todo & (cnt > 0)
        if not fill.any():
            raise TooManyUndefinedPoints("undefined region has no defined neighbours")
        v = acc[fill]
        n = np.linalg.norm(v, axis=-1, keepdims=True)
        v = np.where(n > 0, v / np.where(n > 0, n, 1.0), np.array([0.0, 0.0, 1.0]))
        s[fill] = v
        todo = todo & ~fill
    return s


def _triangle_solid_angles(a, b, c) -> np.ndarray:
    num = np.einsum("...i,...i", a, np.cross(b, c))
    den = 1.0 + np.einsum("...i,...i", a, b) + np.einsum("...i,...i", b, c) + np.einsum("...i,...i", c, a)
    return 2.0 * np.arctan2(num, den)


def _count_degenerate(*verts) -> int:
    bad = np.zeros(verts[0].shape[:-1], dtype=bool)
    for i in range(3):
        for j in range(i + 1, 3):
            bad |= np.einsum("...i,...i", verts[i], verts[j]) < -1.0 + DEGENERATE_TOL
    return int(bad.sum())


def lattice_charge(s: np.ndarray) -> tuple[float, int]:
    """Solid-angle charge of a unit field ``s`` (M, M, 3) and degenerate-triangle count."""
    s00, s10, s11, s01 = s[:-1, :-1], s[1:, :-1], s[1:, 1:], s[:-1, 1:]
    omega = np.concatenate(
        [_triangle_solid_angles(s00, s10, s11).ravel(), _triangle_solid_angles(s00, s11, s01).ravel()]
    )
    degenerate = _count_degenerate(s00, s10, s11) + _count_degenerate(s00, s11, s01)
    # np.sum over a fixed contiguous array is pairwise and order-deterministic
    return ORIENTATION * float(np.sum(omega)) / (4.0 * math.pi), degenerate


def integral_charge(s: np.ndarray, spacing: float) -> float:
    """Finite-difference quadrature of the continuum charge density."""
    ds_dx = np.gradient(s, spacing, axis=0)
    ds_dxp = np.gradient(s, spacing, axis=1)
    density = np.einsum("ijk,ijk->ij", s, np.cross(ds_dx, ds_dxp))
    return ORIENTATION * float(np.sum(density)) * spacing**2 / (4.0 * math.pi)


def _nearest_int(q: float) -> int:
    return int(math.floor(q + 0.5))


def skyrmion_number(field: StokesField, method: str = "lattice") -> TextureReport:
    """Charge report of a texture; ``method`` selects which estimator fills ``Q_raw``."""
    if method not in ("lattice", "integral"):
        raise ValueError(f"unknown charge method {method!r}")
    s = filled_unit_field(field)
    q_lat, degenerate = lattice_charge(s)
    q_int = integral_charge(s, field.grid.spacing)
    q = q_lat if method == "lattice" else q_int
    qr = _nearest_int(q)
    boundary = np.concatenate([s[0], s[-1], s[1:-1, 0], s[1:-1, -1]])
    dev = float(np.max(np.arccos(np.clip(-boundary[:, 2], -1.0, 1.0))))
    return TextureReport(
        Q_raw=q,
        Q_rounded=qr,
        integer_residual=abs(q - qr),
        method=method,
        Q_lattice=q_lat,
        Q_integral=q_int,
        undefined_fraction=field.undefined_fraction,
        boundary_deviation=dev,
        boundary_flag=dev > BOUNDARY_FLAG_RAD,
        degenerate_triangles=degenerate,
    )


def helicity_stats(field: StokesField) -> tuple[float, float, float]:
    """(helicity, equatorial band fraction, |s_z| > 0.9 fraction)."""
    s = filled_unit_field(field)
    x = field.grid.x
    X, Xp = np.meshgrid(x, x, indexing="ij")
    band = np.abs(s[..., 2]) < 0.5
    polar = float(np.mean(np.abs(s[..., 2]) > 0.9))
    use = band & (np.hypot(X, Xp) > 0)
    if not use.any():
        return float("nan"), float(band.mean()), polar
    ang = np.arctan2(s[..., 1], s[..., 0]) - np.arctan2(Xp, X)
    return float(np.angle(np.mean(np.exp(1j * ang[use])))), float(band.mean()), polar


def classify_texture(field: StokesField, method: str = "lattice") -> TextureReport:
    """Charge report with helicity and texture class filled in."""
    rep = skyrmion_number(field, method)
    h, band, polar = helicity_stats(field)
    tol = math.pi / 8
    if band < 0.05 and polar > 0.8:
        cls = BUBBLE
    elif math.isnan(h):
        cls = UNDETERMINED
    elif abs(h) < tol and rep.Q_raw < 0:
        cls = NEEL
    elif abs(abs(h) - math.pi) < tol or (abs(h) < tol and rep.Q_raw > 0):
        cls = ANTINEEL
    elif abs(abs(h) - math.pi / 2) < tol:
        cls = BLOCH
    else:
        cls = UNDETERMINED
    return replace(rep, helicity=h, texture_class=cls, band_fraction=band, polar_fraction=polar)

"""Single-photon skyrmion density matrices.

Two routes: spectral truncation of an auxiliary Hermitian matrix whose
Stokes texture is an exact skyrmion of winding ``l``, or the closed-form
|Q| = 1 eigenmode pair.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InsufficientPositiveSpectrum
from .qstate import DensityMatrix, LabeledState, ModeGrid, photon_factors, spectral_decompose

# uniform weights are only used up to this winding, beyond it eigenvalue weights
UNIFORM_WEIGHT_MAX_L = 5


@dataclass(frozen=True)
class SkyrmionSpec:
    l: int
    grid: ModeGrid
    phi0: float = 0.0
    r0: float | None = None
    d: int | None = None
    weights: tuple[float, ...] | None = None
    party: str = "A"

    def __post_init__(self):
        if self.r0 is None:
            object.__setattr__(self, "r0", self.grid.x_max)
        if not self.r0 > 0:
            raise ValueError("r0 must be positive")
        if self.d is None:
            object.__setattr__(self, "d", abs(self.l) + 1)
        if self.d < 1:
            raise ValueError("rank d must be positive")
        if self.weights is not None:
            w = tuple(float(x) for x in self.weights)
            if len(w) != self.d:
                raise ValueError(f"expected {self.d} weights, got {len(w)}")
            if min(w) < 0 or abs(sum(w) - 1.0) > 1e-12:
                raise ValueError("weights must be nonnegative and sum to 1")
            object.__setattr__(self, "weights", w)

    @classmethod
    def from_dict(cls, cfg: dict) -> "SkyrmionSpec":
        grid = ModeGrid(int(cfg.get("m", 64)), float(cfg.get("x_max", 1.0)))
        return cls(
            l=int(cfg["l"]),
            grid=grid,
            phi0=float(cfg.get("phi0", 0.0)),
            r0=cfg.get("r0"),
            d=cfg.get("d"),
            weights=cfg.get("weights"),
        )


def profile_angle(r: np.ndarray, r0: float) -> np.ndarray:
    """Polar angle Theta(r): linear from 0 to pi inside r0, pi outside."""
    return np.where(r < r0, math.pi * r / r0, math.pi)


def auxiliary_matrix(spec: SkyrmionSpec) -> np.ndarray:
    """Hermitian ``2M x 2M`` matrix whose Stokes texture is the target skyrmion.

    Not a density matrix in general (indefinite, trace M).
    """
    x = spec.grid.x
    X, Xp = np.meshgrid(x, x, indexing="ij")
    theta = profile_angle(np.hypot(X, Xp), spec.r0)
    azimuth = spec.l * np.arctan2(Xp, X) + spec.phi0
    hv = np.sin(theta) * np.exp(1j * azimuth)
    hh = np.cos(theta / 2) ** 2
    vv = np.sin(theta / 2) ** 2
    return np.block([[hh, hv], [hv.conj().T, vv]])


def _phase_normalize(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    if nz.size == 0:
        return v
    c = v[nz[0]]
    return v * (abs(c) / c)


def _sort_key(lam: float, v: np.ndarray):
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    first = int(nz[0]) if nz.size else len(v)
    lead = float(v[first].real) if nz.size else 0.0
    return (-round(float(lam), 10), first, -lead)


def truncate_to_density(A, d: int, weights: Sequence[float] | str | None = None, party: str = "A") -> DensityMatrix:
    """Keep the ``d`` largest positive eigenvectors of ``A`` and mix them.

    ``weights`` is a sequence of ``d`` probabilities, ``None`` for uniform
    ``1/d``, or ``"eigenvalues"`` for ``lambda_i / sum(lambda)``.
    """
    lam, vecs = spectral_decompose(A)
    if int(np.sum(lam > 1e-10)) < d:
        raise InsufficientPositiveSpectrum(f"A has {int(np.sum(lam > 1e-10))} positive eigenvalues, need {d}")
    cand = [(lam[i], _phase_normalize(vecs[:, i])) for i in range(len(lam)) if lam[i] > 1e-10]
    cand.sort(key=lambda p: _sort_key(*p))
    kept = cand[:d]
    if weights is None:
        w = np.full(d, 1.0 / d)
    elif isinstance(weights, str):
        if weights != "eigenvalues":
            raise ValueError(f"unknown weight rule {weights!r}")
        w = np.array([p[0] for p in kept])
        w = w / w.sum()
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (d,) or w.min() < 0 or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be d nonnegative numbers summing to 1")
    M = A.shape[0] // 2
    return DensityMatrix.factored(photon_factors(party, M), w, np.array([p[1] for p in kept]))


def analytic_modes_q1(grid: ModeGrid, sign: int = -1, party: str = "A") -> tuple[LabeledState, LabeledState]:
    """Closed-form orthonormal mode pair of a |Q| = 1 texture.

    ``sign=-1`` gives Q = -1, ``sign=+1`` the opposite charge. Each mode is
    normalized on the grid; their overlap vanishes by parity on a
    sign-symmetric grid.
    """
    if sign not in (-1, 1):
        raise ValueError("sign must be +1 or -1")
    t = grid.x / grid.x_max
    wave = np.sin(math.pi * t)
    bump = np.sin(0.5 * math.pi * t) ** 2
    u1 = np.concatenate([sign * 0.5j * wave, 1.0 + bump])
    u2 = np.concatenate([(1.0 - bump).astype(complex), 0.5 * wave])
    factors = photon_factors(party, grid.M)
    return (
        LabeledState(factors, u1 / np.linalg.norm(u1)),
        LabeledState(factors, u2 / np.linalg.norm(u2)),
    )


def build_single_photon_skyrmion(spec: SkyrmionSpec, method: str = "spectral") -> DensityMatrix:
    if method == "analytic_q1":
        if abs(spec.l) != 1:
            raise ValueError("the analytic construction only exists for |l| = 1")
        # l = +1 targets Q = -1
        u1, u2 = analytic_modes_q1(spec.grid, sign=-spec.l, party=spec.party)
        return DensityMatrix.factored(u1.factors, [0.5, 0.5], np.stack([u1.amplitudes, u2.amplitudes]))
    if method != "spectral":
        raise ValueError(f"unknown synthesis method {method!r}")
    weights = spec.weights
    if weights is None and abs(spec.l) > UNIFORM_WEIGHT_MAX_L:
        weights = "eigenvalues"
    return truncate_to_density(auxiliary_matrix(spec), spec.d, weights, party=spec.party)

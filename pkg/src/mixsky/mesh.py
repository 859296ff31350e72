"""Rectangular two-port interferometer meshes and the relative-phase scan.

Element convention. An element on ports ``(p, p+1)`` acts as

    T(theta, phi) = C(theta) @ diag(e^{i phi}, 1),
    C(theta) = [[cos(theta/2), i sin(theta/2)], [i sin(theta/2), cos(theta/2)]]

so ``phi`` is a phase on the upper input followed by a symmetric coupler.
``theta = 0`` is the bar state (identity) and ``theta = pi/2`` a 50:50
splitter. A program applies its elements in list order and finishes with a
phase ``e^{i output_phases[p]}`` on every port.

Mesh bins interleave polarization: bin ``2x + sigma`` holds pseudospin
``sigma`` at mode ``x``, while single-photon vectors elsewhere in the package
are pseudospin-major (index ``sigma * M + x``).
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bipartite import reduce_all_subspaces
from .errors import DimensionMismatch, NonOrthonormalInput, NotUnitary
from .qstate import LabeledState, photon_factors
from .texture import classify_texture, stokes_from_density, stokes_from_wavefunction

_ZERO = 1e-14
SCAN_SUBSPACES = {
    "joint": None,
    "local_A": "local_A",
    "local_B": "local_B",
    "nonlocal": "nonlocal_xA_sigmaB",
}


@dataclass(frozen=True)
class MeshElement:
    layer: int
    port: int
    theta: float
    phi: float

    def matrix(self) -> np.ndarray:
        return element_matrix(self.theta, self.phi)


@dataclass
class MeshProgram:
    dim: int
    elements: list[MeshElement] = field(default_factory=list)
    output_phases: np.ndarray | None = None

    def __post_init__(self):
        if self.output_phases is None:
            self.output_phases = np.zeros(self.dim)
        self.output_phases = np.asarray(self.output_phases, dtype=float)
        if self.output_phases.shape != (self.dim,):
            raise DimensionMismatch("output_phases must have length dim")
        for e in self.elements:
            if not 0 <= e.port < self.dim - 1:
                raise DimensionMismatch(f"element port {e.port} outside a {self.dim}-port mesh")

    @property
    def depth(self) -> int:
        return 1 + max((e.layer for e in self.elements), default=-1)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "elements": [
                {"layer": e.layer, "port": e.port, "theta": float(e.theta), "phi": float(e.phi)} for e in self.elements
            ],
            "output_phases": [float(p) for p in self.output_phases],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MeshProgram":
        els = [MeshElement(int(e["layer"]), int(e["port"]), float(e["theta"]), float(e["phi"])) for e in d["elements"]]
        return cls(int(d["dim"]), els, np.array(d["output_phases"], dtype=float))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_json(cls, text: str) -> "MeshProgram":
        return cls.from_dict(json.loads(text))


def element_matrix(theta: float, phi: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c * np.exp(1j * phi), 1j * s], [1j * s * np.exp(1j * phi), c]])


def complete_isometry(columns: Sequence[np.ndarray], tol: float = 1e-10) -> np.ndarray:
    """Unitary whose first columns are ``columns``, completed from the canonical basis."""
    cols = np.array([np.asarray(c, dtype=complex).reshape(-1) for c in columns]).T
    D, k = cols.shape
    if k > D:
        raise NonOrthonormalInput(f"{k} columns cannot be orthonormal in dimension {D}")
    if np.max(np.abs(cols.conj().T @ cols - np.eye(k)), initial=0.0) > tol:
        raise NonOrthonormalInput("input columns are not orthonormal within tolerance")
    basis = [cols[:, i] for i in range(k)]
    for j in range(D):
        if len(basis) == D:
            break
        v = np.zeros(D, dtype=complex)
        v[j] = 1.0
        # two Gram-Schmidt passes keep the completion orthogonal to machine precision
        for _ in range(2):
            for b in basis:
                v = v - (b.conj() @ v) * b
        n = np.linalg.norm(v)
        if n > 1e-8:
            basis.append(v / n)
    U = np.stack(basis, axis=1)
    U[:, :k] = cols
    return U


def _assign_layers(sequence: list[tuple[int, float, float]], D: int) -> list[MeshElement]:
    free = [0] * D
    out = []
    for port, theta, phi in sequence:
        layer = max(free[port], free[port + 1])
        free[port] = free[port + 1] = layer + 1
        out.append(MeshElement(layer, port, theta, phi))
    # sorting by layer keeps the relative order of elements that share a port
    out.sort(key=lambda e: (e.layer, e.port))
    return out


def mesh_decompose(U, tol: float = 1e-8) -> MeshProgram:
    """Rectangular factorization ``U = diag(e^{i out}) @ T_n ... T_1``.

    Alternating diagonals of ``U`` are nulled from the right and from the
    left; the left-hand elements are then commuted through the residual
    diagonal so every element acts before the output phases.
    """
    U = np.array(U, dtype=complex)
    D = U.shape[0]
    if U.shape != (D, D):
        raise NotUnitary("mesh_decompose needs a square matrix")
    if np.max(np.abs(U.conj().T @ U - np.eye(D))) > tol:
        raise NotUnitary("matrix is not unitary within tolerance")
    right: list[tuple[int, float, float]] = []
    left: list[tuple[int, float, float]] = []
    for i in range(D - 1):
        for j in range(i + 1):
            if i % 2 == 0:
                r, c = D - 1 - j, i - j
                a, b = U[r, c], U[r, c + 1]
                if abs(a) <= _ZERO:
                    theta, phi = 0.0, 0.0
                else:
                    theta = 2 * math.atan2(abs(a), abs(b))
                    phi = np.angle(a) - np.angle(b) - math.pi / 2
                Tinv = element_matrix(theta, phi).conj().T
                U[:, c : c + 2] = U[:, c : c + 2] @ Tinv
                U[r, c] = 0.0
                right.append((c, theta, phi))
            else:
                r, c = D - 2 - i + j, j
                a, b = U[r, c], U[r + 1, c]
                if abs(b) <= _ZERO:
                    theta, phi = 0.0, 0.0
                else:
                    theta = 2 * math.atan2(abs(b), abs(a))
                    phi = np.angle(b) - np.angle(a) + math.pi / 2
                U[r : r + 2, :] = element_matrix(theta, phi) @ U[r : r + 2, :]
                U[r + 1, c] = 0.0
                left.append((r, theta, phi))
    d = np.diag(U).copy()
    moved = []
    for port, theta, phi in reversed(left):
        d1, d2 = d[port], d[port + 1]
        if theta == 0.0:
            # bar element: its phase folds straight into the diagonal
            d[port] = d1 * np.exp(-1j * phi)
            moved.append((port, 0.0, 0.0))
            continue
        new_phi = float(np.angle(-d1 / d2))
        d[port] = -np.exp(-1j * phi) * d2
        moved.append((port, theta, new_phi))
    sequence = right + moved
    sequence = [(p, float(t), float(np.mod(f, 2 * math.pi)) if t != 0.0 else 0.0) for p, t, f in sequence]
    return MeshProgram(D, _assign_layers(sequence, D), np.angle(d))


def mesh_apply(program: MeshProgram, vec) -> np.ndarray:
    """Propagate a vector (or the columns of a D x n array) through the mesh."""
    v = np.array(vec, dtype=complex)
    if v.shape[0] != program.dim:
        raise DimensionMismatch(f"input has length {v.shape[0]}, mesh has {program.dim} ports")
    for e in program.elements:
        p = e.port
        v[p : p + 2] = e.matrix() @ v[p : p + 2]
    phases = np.exp(1j * program.output_phases)
    return v * (phases if v.ndim == 1 else phases[:, None])


def mesh_unitary(program: MeshProgram) -> np.ndarray:
    return mesh_apply(program, np.eye(program.dim, dtype=complex))


# ---------------------------------------------------------------------------
# polarization bookkeeping and the phase scan
# ---------------------------------------------------------------------------

def bins_from_composite(M: int) -> np.ndarray:
    """Index array ``p`` with ``mesh_vec = composite_vec[p]``."""
    return np.array([(b % 2) * M + b // 2 for b in range(2 * M)])


def to_mesh_bins(vec: np.ndarray, M: int) -> np.ndarray:
    return np.asarray(vec)[bins_from_composite(M)]


def from_mesh_bins(vec: np.ndarray, M: int) -> np.ndarray:
    out = np.empty_like(np.asarray(vec))
    out[bins_from_composite(M)] = vec
    return out


def mode_program(modes: Sequence) -> MeshProgram:
    """Mesh taking input ports 0 and 1 to the two engineered modes."""
    U = np.stack([m.amplitudes if isinstance(m, LabeledState) else np.asarray(m, dtype=complex) for m in modes])
    M = U.shape[1] // 2
    return mesh_decompose(complete_isometry([to_mesh_bins(u, M) for u in U]))


def prepared_state(program: MeshProgram, phi: float) -> LabeledState:
    """Two-photon output for a polarization Bell input and phase ``phi`` on port 1.

    Each photon enters the mesh on port 0 or 1 (the two polarizations after
    the beam splitter); the pair ``(0, 0) + e^{i phi} (1, 1)`` leaves as
    ``(u1 u1 + e^{i phi} u2 u2) / sqrt(2)``.
    """
    D = program.dim
    M = D // 2
    inputs = np.zeros((D, 2), dtype=complex)
    inputs[0, 0] = 1.0
    inputs[1, 1] = 1.0
    out = mesh_apply(program, inputs)
    v1, v2 = from_mesh_bins(out[:, 0], M), from_mesh_bins(out[:, 1], M)
    amp = (np.kron(v1, v1) + np.exp(1j * phi) * np.kron(v2, v2)) / math.sqrt(2)
    return LabeledState(photon_factors("A", M) + photon_factors("B", M), amp / np.linalg.norm(amp))


def default_phase_grid(points: int = 256) -> np.ndarray:
    return 2 * math.pi * np.arange(points) / points


def _scan_point(program, phi, subspace, method) -> dict:
    psi = prepared_state(program, phi)
    key = SCAN_SUBSPACES[subspace]
    field_ = stokes_from_wavefunction(psi) if key is None else stokes_from_density(reduce_all_subspaces(psi)[key])
    rep = classify_texture(field_, method)
    return {"phi": float(phi), "Q_raw": rep.Q_raw, "Q_rounded": rep.Q_rounded, "class": rep.texture_class}


def phase_scan(
    modes: Sequence,
    phis: Sequence[float] | None = None,
    subspace: str = "joint",
    method: str = "lattice",
    threads: int = 1,
) -> list[dict]:
    """Charge of the mesh-prepared state versus the relative phase."""
    if subspace not in SCAN_SUBSPACES:
        raise ValueError(f"subspace must be one of {sorted(SCAN_SUBSPACES)}")
    phis = default_phase_grid() if phis is None else np.asarray(phis, dtype=float)
    program = mode_program(modes)
    job = lambda p: _scan_point(program, p, subspace, method)  # noqa: E731
    if threads > 1 and len(phis) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(job, phis))
    return [job(p) for p in phis]


def sign_changes(rows: Sequence[dict]) -> int:
    """Number of sign flips of the nonzero ``Q_rounded`` values along a scan."""
    signs = [np.sign(r["Q_rounded"]) for r in rows if r["Q_rounded"] != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)

"""Two-photon skyrmion states, their four reduced subspaces and nested topology."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NonOrthogonalModes, PhaseWithConjugation, WrongFactorShape
from .qstate import (
    MODE,
    PSEUDOSPIN,
    DensityMatrix,
    LabeledState,
    ModeGrid,
    as_density,
    partial_trace,
    photon_factors,
)
from .texture import TextureReport, classify_texture, stokes_from_density, stokes_from_wavefunction

SUBSPACES = ("local_A", "local_B", "nonlocal_sigmaA_xB", "nonlocal_xA_sigmaB")

# kept factors, pseudospin first so the Stokes extraction reads 2x2 blocks
_KEEP = {
    "local_A": (("A", PSEUDOSPIN), ("A", MODE)),
    "local_B": (("B", PSEUDOSPIN), ("B", MODE)),
    "nonlocal_sigmaA_xB": (("A", PSEUDOSPIN), ("B", MODE)),
    "nonlocal_xA_sigmaB": (("B", PSEUDOSPIN), ("A", MODE)),
}


def _mode_vectors(modes) -> np.ndarray:
    vecs = [m.amplitudes if isinstance(m, LabeledState) else np.asarray(m, dtype=complex) for m in modes]
    return np.stack(vecs)


def build_two_photon(
    modes: Sequence,
    conjugate_B: bool = True,
    phi: float = 0.0,
    weights: Sequence[complex] | None = None,
) -> LabeledState:
    """``sum_i w_i |u_i>_A |u_i^(*)>_B``, with ``e^{i phi}`` on the second term of the Bell form.

    ``modes`` are single-photon states over (pseudospin, mode). With
    ``conjugate_B`` the B-modes are complex conjugated and ``phi`` must be 0.
    """
    U = _mode_vectors(modes)
    d, D = U.shape
    if D % 2:
        raise WrongFactorShape("single-photon modes have even dimension 2M")
    gram = U.conj() @ U.T
    if np.max(np.abs(gram - np.eye(d))) > 1e-10:
        raise NonOrthogonalModes("modes must be orthonormal within 1e-10")
    if conjugate_B and phi != 0:
        raise PhaseWithConjugation("the relative phase is only defined for the Bell form")
    if not conjugate_B and phi != 0 and d != 2:
        raise ValueError("a relative phase needs exactly two modes")
    w = np.full(d, 1.0 / np.sqrt(d), dtype=complex) if weights is None else np.asarray(weights, dtype=complex)
    if not conjugate_B and d == 2:
        w = w * np.array([1.0, np.exp(1j * phi)])
    B = U.conj() if conjugate_B else U
    amp = np.einsum("i,ia,ib->ab", w, U, B).reshape(-1)
    M = D // 2
    return LabeledState(photon_factors("A", M) + photon_factors("B", M), amp / np.linalg.norm(amp))


def _check_pair(state) -> None:
    keys = [f.key for f in state.factors]
    if keys != [("A", PSEUDOSPIN), ("A", MODE), ("B", PSEUDOSPIN), ("B", MODE)]:
        raise WrongFactorShape(f"expected factors (sigma_A, x_A, sigma_B, x_B), got {[str(f) for f in state.factors]}")


def reduce_all_subspaces(state) -> dict[str, DensityMatrix]:
    """The two local and two hybrid reduced density matrices of a two-photon state."""
    _check_pair(state)
    rho = as_density(state)
    return {name: partial_trace(rho, keep) for name, keep in _KEEP.items()}


@dataclass(frozen=True)
class NestedReport:
    joint: TextureReport | None
    local_A: TextureReport
    local_B: TextureReport
    nonlocal_sigmaA_xB: TextureReport
    nonlocal_xA_sigmaB: TextureReport

    def items(self):
        yield "joint", self.joint
        for name in SUBSPACES:
            yield name, getattr(self, name)

    @property
    def nested(self) -> bool:
        hits = sum(1 for _, r in self.items() if r is not None and r.Q_rounded != 0 and r.integer_residual < 0.05)
        return hits >= 2

    def to_dict(self) -> dict:
        subspaces = []
        for name, rep in self.items():
            if rep is None:
                continue
            subspaces.append(
                {
                    "label": name,
                    "Q_raw": rep.Q_raw,
                    "Q_rounded": rep.Q_rounded,
                    "helicity": rep.helicity,
                    "class": rep.texture_class,
                    "diagnostics": {
                        "method": rep.method,
                        "Q_lattice": rep.Q_lattice,
                        "Q_integral": rep.Q_integral,
                        "integer_residual": rep.integer_residual,
                        "undefined_fraction": rep.undefined_fraction,
                        "boundary_deviation": rep.boundary_deviation,
                        "boundary_flag": rep.boundary_flag,
                        "degenerate_triangles": rep.degenerate_triangles,
                    },
                }
            )
        return {"nested": self.nested, "subspaces": subspaces}


def subspace_fields(state, grid: ModeGrid | None = None) -> dict:
    """Stokes fields of the joint wavefunction (pure input only) and the four reductions."""
    _check_pair(state)
    out = {}
    if isinstance(state, LabeledState):
        out["joint"] = stokes_from_wavefunction(state, grid)
    for name, rho in reduce_all_subspaces(state).items():
        out[name] = stokes_from_density(rho, grid)
    return out


def nested_report(state, method: str = "lattice", grid: ModeGrid | None = None) -> NestedReport:
    """Texture reports for all subspaces; ``joint`` is None for mixed input."""
    fields = subspace_fields(state, grid)
    reps = {name: classify_texture(f, method) for name, f in fields.items()}
    return NestedReport(joint=reps.get("joint"), **{n: reps[n] for n in SUBSPACES})

"""N-photon biseparable mixtures built from a two-photon Bell state.

Every pair of photons shares the Bell state with equal probability while the
remaining photons sit in a common single-photon state ``varrho``. Only the
two-photon reduction is ever formed: it has the closed form

    w_bell |Bell><Bell| + w_mix (rho0 (x) varrho + varrho (x) rho0) + w_noise varrho (x) varrho

with ``rho0`` the single-photon marginal of the Bell state. The dense
N-party construction is kept for small oracle checks only.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Sequence

import numpy as np

from .bipartite import NestedReport, build_two_photon, nested_report
from .errors import EdgeBinsTooLarge, ShapeMismatch
from .qstate import MODE, PSEUDOSPIN, DensityMatrix, LabeledState, partial_trace, photon_factors

VARRHO_KINDS = ("uniform", "edge_concentrated")


@dataclass(frozen=True)
class VarrhoSpec:
    kind: str
    M: int
    edge_bins: int | None = None

    def __post_init__(self):
        if self.kind not in VARRHO_KINDS:
            raise ValueError(f"varrho kind must be one of {VARRHO_KINDS}")
        if self.M < 1:
            raise ValueError("M must be positive")
        if self.kind == "edge_concentrated":
            if self.edge_bins is None:
                object.__setattr__(self, "edge_bins", max(2, self.M // 10))
            if self.edge_bins < 1:
                raise ValueError("edge_bins must be positive")


def varrho_diagonal(spec: VarrhoSpec) -> np.ndarray:
    """Diagonal of varrho in pseudospin-major order."""
    M = spec.M
    if spec.kind == "uniform":
        return np.full(2 * M, 1.0 / (2 * M))
    if 2 * spec.edge_bins > M:
        raise EdgeBinsTooLarge(f"2 * edge_bins = {2 * spec.edge_bins} exceeds M = {M}")
    occ = np.zeros(M, dtype=bool)
    occ[: spec.edge_bins] = True
    occ[M - spec.edge_bins :] = True
    diag = np.concatenate([occ, occ]).astype(float)
    return diag / diag.sum()


def single_photon_varrho(spec: VarrhoSpec, party: str = "A") -> DensityMatrix:
    return DensityMatrix.dense(photon_factors(party, spec.M), np.diag(varrho_diagonal(spec)))


def pair_weights(N: int) -> tuple[Fraction, Fraction, Fraction]:
    """Exact weights of the Bell term, each cross term, and the varrho-varrho term."""
    if N < 2:
        raise ValueError("N must be at least 2")
    pairs = N * (N - 1)
    return Fraction(2, pairs), Fraction(2 * (N - 2), pairs), Fraction((N - 2) * (N - 3), pairs)


def _relabel(rho: DensityMatrix, party: str) -> DensityMatrix:
    return DensityMatrix.dense(photon_factors(party, rho.factors[1].dim), rho.to_dense())


def reduced_pair_state(N: int, bell: LabeledState, varrho: DensityMatrix) -> DensityMatrix:
    """Closed-form two-photon reduction of the N-photon mixture.

    The result is a mixture of the factored Bell projector and lazy tensor
    products, so nothing of size ``(2M)^2 x (2M)^2`` is allocated.
    """
    keys = [f.key for f in bell.factors]
    if keys != [("A", PSEUDOSPIN), ("A", MODE), ("B", PSEUDOSPIN), ("B", MODE)]:
        raise ShapeMismatch("bell must be a two-photon state over (sigma_A, x_A, sigma_B, x_B)")
    if varrho.dims != bell.dims[:2]:
        raise ShapeMismatch(f"varrho dims {varrho.dims} do not match a single photon {bell.dims[:2]}")
    w_bell, w_mix, w_noise = (float(w) for w in pair_weights(N))
    bell_rho = DensityMatrix.from_pure(bell)
    if N == 2:
        return bell_rho
    rho0_A = partial_trace(bell_rho, bell.factors[:2])
    rho0_B = _relabel(rho0_A, "B")
    var_A, var_B = _relabel(varrho, "A"), _relabel(varrho, "B")
    return DensityMatrix.mixture(
        [
            (w_bell, bell_rho),
            (w_mix, DensityMatrix.product([rho0_A, var_B])),
            (w_mix, DensityMatrix.product([var_A, rho0_B])),
            (w_noise, DensityMatrix.product([var_A, var_B])),
        ]
    )


def multiphoton_nested_report(
    N: int, varrho_spec: VarrhoSpec, modes: Sequence[LabeledState], method: str = "integral"
) -> NestedReport:
    """Nested texture report of any photon pair of the N-photon mixture.

    The pair reduction does not depend on which pair is chosen, so one
    report covers all of them. ``N = 2`` evaluates the pure Bell state,
    joint texture included.
    """
    bell = build_two_photon(modes, conjugate_B=False)
    if N == 2:
        return nested_report(bell, method=method)
    return nested_report(reduced_pair_state(N, bell, single_photon_varrho(varrho_spec)), method=method)


def dense_multiphoton_state(N: int, bell: LabeledState, varrho: DensityMatrix) -> DensityMatrix:
    """Full N-party mixture as a dense matrix (oracle use, small M only)."""
    d = bell.dims[0] * bell.dims[1]
    if d**N > 4096:
        raise MemoryError(f"dense {N}-photon state of dimension {d ** N} is too large")
    b = np.outer(bell.amplitudes, bell.amplitudes.conj()).reshape(d, d, d, d)
    v = varrho.to_dense()
    total = np.zeros((d,) * (2 * N), dtype=complex)
    for i, j in itertools.combinations(range(N), 2):
        rest = [k for k in range(N) if k not in (i, j)]
        # operands: Bell on (i, j), varrho on every other party
        ops = [b, [i, j, N + i, N + j]]
        for k in rest:
            ops += [v, [k, N + k]]
        total += np.einsum(*ops, list(range(2 * N)))
    total /= comb(N, 2)
    parties = [chr(ord("A") + k) for k in range(N)]
    M = bell.dims[1]
    factors = [f for p in parties for f in photon_factors(p, M)]
    return DensityMatrix.dense(factors, total.reshape(d**N, d**N))

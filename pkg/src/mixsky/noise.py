"""Noise channels acting on two-photon skyrmion states and robustness sweeps.

Randomness comes from Philox (counter-based) generators. Every sweep point
gets its own stream, keyed by SHA-256 of ``(master seed, channel, sorted
parameter items)``, so results do not depend on the order or the number of
workers that evaluate the points.
"""
from __future__ import annotations

import hashlib
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bipartite import build_two_photon, reduce_all_subspaces
from .errors import MixskyError, NotCoefficientForm, RankExceedsDimension, ShapeMismatch
from .qstate import (
    MODE,
    CoefficientState,
    DensityMatrix,
    FactorLabel,
    LabeledState,
    ModeGrid,
    as_density,
    maximally_mixed,
    photon_factors,
)
from .synth import analytic_modes_q1
from .texture import classify_texture, stokes_from_density

# the subspaces the sweep observables refer to
LOCAL_SUBSPACE = "local_B"
NONLOCAL_SUBSPACE = "nonlocal_xA_sigmaB"
BREAKDOWN_RESIDUAL = 0.25


@dataclass(frozen=True)
class DephasingSpec:
    sigma: float
    mu: float = 0.0
    mode: str = "analytic"
    shots: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.mode not in ("analytic", "monte_carlo"):
            raise ValueError(f"unknown dephasing mode {self.mode!r}")
        if self.mode == "monte_carlo" and self.shots < 1:
            raise ValueError("monte_carlo dephasing needs shots >= 1")


@dataclass(frozen=True)
class WishartSpec:
    D: int
    K: int
    eps: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.D < 1 or self.K < 1:
            raise ValueError("D and K must be positive")
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError("eps must lie in [0, 1]")


def philox(seed: int, *key_parts) -> np.random.Generator:
    """Philox generator keyed by a hash of ``seed`` and ``key_parts``."""
    text = repr((int(seed),) + tuple(key_parts)).encode()
    key = int.from_bytes(hashlib.sha256(text).digest()[:16], "little")
    return np.random.Generator(np.random.Philox(key=key))


def point_seed(seed: int, *key_parts) -> int:
    text = repr((int(seed),) + tuple(key_parts)).encode()
    return int.from_bytes(hashlib.sha256(text).digest()[:8], "little")


def pair_coefficient_state(modes: Sequence) -> CoefficientState:
    """``(1/d) sum_mn |u_m u_m*><u_n u_n*|`` in coefficient form (the conjugated pair state)."""
    U = np.stack([m.amplitudes if isinstance(m, LabeledState) else np.asarray(m, dtype=complex) for m in modes])
    d, D = U.shape
    vecs = np.einsum("ia,ib->iab", U, U.conj()).reshape(d, -1)
    M = D // 2
    return CoefficientState(photon_factors("A", M) + photon_factors("B", M), vecs, np.full((d, d), 1.0 / d))


def dephase(state: CoefficientState, spec: DephasingSpec) -> CoefficientState:
    """Average a random phase ``e^{i phi}``, ``phi ~ N(mu, sigma)``, over the cross terms.

    One phase per shot multiplies every coefficient above the diagonal (and
    its conjugate below), as for the two-term pair state. The analytic mode
    uses ``<e^{i phi}> = exp(i mu - sigma^2 / 2)``.
    """
    if not isinstance(state, CoefficientState):
        raise NotCoefficientForm(f"dephase needs a CoefficientState, got {type(state).__name__}")
    if spec.mode == "analytic":
        f = np.exp(1j * spec.mu - 0.5 * spec.sigma**2)
    else:
        rng = philox(spec.seed, "dephase", spec.mu, spec.sigma, spec.shots)
        f = np.mean(np.exp(1j * rng.normal(spec.mu, spec.sigma, size=spec.shots)))
    c = np.array(state.coefficients)
    upper = np.triu(np.ones(c.shape, dtype=bool), 1)
    c[upper] *= f
    c[upper.T] *= np.conj(f)
    return CoefficientState(state.factors, state.vectors, c)


def wishart_density(spec: WishartSpec, factors: Sequence[FactorLabel] | None = None, rng=None) -> DensityMatrix:
    """``G G^dag / Tr(G G^dag)`` for a ``D x K`` complex Gaussian ``G``, stored factored."""
    if spec.K > spec.D:
        raise RankExceedsDimension(f"rank K={spec.K} exceeds dimension D={spec.D}")
    if factors is None:
        factors = (FactorLabel("W", MODE, spec.D),)
    if int(np.prod([f.dim for f in factors])) != spec.D:
        raise ShapeMismatch("factor dimensions do not multiply to D")
    rng = rng if rng is not None else philox(spec.seed, "wishart", spec.D, spec.K)
    scale = 1.0 / math.sqrt(2.0)
    G = rng.normal(0.0, scale, size=(spec.K, spec.D)) + 1j * rng.normal(0.0, scale, size=(spec.K, spec.D))
    norms2 = np.sum(np.abs(G) ** 2, axis=1)
    return DensityMatrix.factored(factors, norms2 / norms2.sum(), G / np.sqrt(norms2)[:, None])


def _same_shape(a: DensityMatrix, b: DensityMatrix) -> None:
    if [f.key for f in a.factors] != [f.key for f in b.factors] or a.dims != b.dims:
        raise ShapeMismatch("states must share factor labels and dimensions")


def mix(rho, noise, eps: float) -> DensityMatrix:
    """``(1 - eps) rho + eps noise``; factored inputs are concatenated."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    rho, noise = as_density(rho), as_density(noise)
    _same_shape(rho, noise)
    if eps == 0.0:
        return rho
    if eps == 1.0:
        return noise
    if rho.storage == "factored" and noise.storage == "factored":
        w = np.concatenate([(1 - eps) * rho.weights, eps * noise.weights])
        v = np.concatenate([rho.vectors, noise.vectors])
        return DensityMatrix.factored(rho.factors, w, v)
    if rho.storage == "dense" and noise.storage == "dense":
        return DensityMatrix.dense(rho.factors, (1 - eps) * rho.matrix + eps * noise.matrix)
    return DensityMatrix.mixture([(1 - eps, rho), (eps, noise)])


def depolarize(rho, eps: float) -> DensityMatrix:
    """``(1 - eps) rho + eps I / dim``."""
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    rho = as_density(rho)
    if eps == 0.0:
        return rho
    if rho.storage == "dense":
        return DensityMatrix.dense(rho.factors, (1 - eps) * rho.matrix + eps * np.eye(rho.dim) / rho.dim)
    return DensityMatrix.mixture([(1 - eps, rho), (eps, maximally_mixed(rho.factors))])


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

CHANNEL_PARAMS = {
    "dephasing": ("m", "sigma"),
    "wishart": ("m", "k", "eps"),
    "depolarize": ("m", "eps"),
}
OBSERVABLES = ("local_Q", "nonlocal_Q", "class")


class _StateCache:
    def __init__(self, sign: int, x_max: float):
        self.sign, self.x_max = sign, x_max
        self._modes: dict[int, tuple] = {}

    def modes(self, M: int):
        if M not in self._modes:
            self._modes[M] = analytic_modes_q1(ModeGrid(M, self.x_max), self.sign)
        return self._modes[M]


def _noisy_state(channel: str, point: dict, seed: int, cache: _StateCache, opts: dict):
    M = int(point["m"])
    modes = cache.modes(M)
    if channel == "dephasing":
        spec = DephasingSpec(
            sigma=float(point["sigma"]),
            mu=float(point.get("mu", opts.get("mu", 0.0))),
            mode=opts.get("mode", "analytic"),
            shots=int(opts.get("shots", 1000)),
            seed=seed,
        )
        return dephase(pair_coefficient_state(modes), spec)
    pure = build_two_photon(modes, conjugate_B=True)
    if channel == "wishart":
        D = (2 * M) ** 2
        wspec = WishartSpec(D=D, K=int(point["k"]), eps=float(point["eps"]), seed=seed)
        noise = wishart_density(wspec, pure.factors, rng=philox(seed, "wishart"))
        return mix(pure, noise, wspec.eps)
    if channel == "depolarize":
        return depolarize(pure, float(point["eps"]))
    raise ValueError(f"unknown channel {channel!r}")


def _evaluate(channel, point, master_seed, cache, method, opts) -> dict:
    seed = point_seed(master_seed, channel, tuple(sorted(point.items())))
    row = dict(point)
    row["seed"] = seed
    try:
        state = _noisy_state(channel, point, seed, cache, opts)
        red = reduce_all_subspaces(state)
        nonlocal_rep = classify_texture(stokes_from_density(red[NONLOCAL_SUBSPACE]), method)
        local_rep = classify_texture(stokes_from_density(red[LOCAL_SUBSPACE]), method)
        rep = local_rep if opts["observable"] == "local_Q" else nonlocal_rep
        row.update(
            Q_raw=rep.Q_raw,
            Q_rounded=rep.Q_rounded,
            **{"class": rep.texture_class},
            residual=rep.integer_residual,
            error="",
        )
    except (MixskyError, ValueError, MemoryError) as exc:
        row.update(Q_raw=float("nan"), Q_rounded=0, residual=float("nan"), error=f"{type(exc).__name__}: {exc}")
        row["class"] = ""
    return row


def sweep_points(channel: str, params: dict) -> list[dict]:
    """Cartesian product of the parameter lists in the channel's canonical order."""
    if channel not in CHANNEL_PARAMS:
        raise ValueError(f"unknown channel {channel!r}")
    if not params:
        return []
    required = CHANNEL_PARAMS[channel]
    missing = [p for p in required if p not in params]
    if missing:
        raise ValueError(f"{channel} sweep needs parameters {missing}")
    names = list(required) + sorted(k for k in params if k not in required)
    values = [list(params[n]) for n in names]
    return [dict(zip(names, combo)) for combo in itertools.product(*values)]


def sweep(
    channel: str,
    params: dict,
    observable: str = "nonlocal_Q",
    seed: int = 0,
    method: str = "lattice",
    threads: int = 1,
    sign: int = -1,
    x_max: float = 1.0,
    **opts,
) -> list[dict]:
    """Evaluate a charge observable over a parameter grid.

    Rows come back in grid order whatever ``threads`` is; per-point failures
    are recorded in the ``error`` column instead of raised.
    """
    if observable not in OBSERVABLES:
        raise ValueError(f"observable must be one of {OBSERVABLES}")
    points = sweep_points(channel, params)
    cache = _StateCache(sign, x_max)
    for M in sorted({int(p["m"]) for p in points}):
        cache.modes(M)
    opts["observable"] = observable
    job = lambda p: _evaluate(channel, p, seed, cache, method, opts)  # noqa: E731
    if threads > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(job, points))
    return [job(p) for p in points]


def breakdown_threshold(rows: Sequence[dict], param: str = "sigma", residual: float = BREAKDOWN_RESIDUAL):
    """Smallest ``param`` value whose row has ``residual`` above the threshold, else None."""
    hits = [r[param] for r in rows if not r.get("error") and r["residual"] > residual]
    return min(hits) if hits else None

"""Labeled tensor-factor states, density matrices and partial traces.

Composite indices are row-major over the factor list, so a single photon
with factors ``(pseudospin, mode)`` is indexed ``sigma * M + x`` and its
density matrix has the 2x2 block layout ``[[HH, HV], [VH, VV]]``.

Mixed states produced by construction are kept in structured storage
(``factored``, ``product`` or ``mixture``) so that two-photon objects are
never materialized as (2M)^2 x (2M)^2 arrays; partial traces contract the
structure directly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import LabelCollision, NonHermitian, ShapeMismatch, UnknownFactor

PSEUDOSPIN = "pseudospin"
MODE = "mode"

# largest dimension we are willing to materialize as a dense matrix
DENSE_LIMIT = 4096


@dataclass(frozen=True)
class ModeGrid:
    """Sign-symmetric coordinate grid ``x_k = -x_max + 2 x_max k / (M-1)``."""

    M: int
    x_max: float = 1.0

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 3:
            raise ValueError(f"ModeGrid needs M >= 3, got {self.M}")
        if not self.x_max > 0:
            raise ValueError(f"x_max must be positive, got {self.x_max}")

    @cached_property
    def x(self) -> np.ndarray:
        k = np.arange(self.M)
        x = -self.x_max + 2.0 * self.x_max * k / (self.M - 1)
        # make the mirror symmetry exact, not just up to rounding
        half = self.M // 2
        x[self.M - 1 - np.arange(half)] = -x[:half]
        if self.M % 2:
            x[half] = 0.0
        x.flags.writeable = False
        return x

    @property
    def spacing(self) -> float:
        return 2.0 * self.x_max / (self.M - 1)


@dataclass(frozen=True)
class FactorLabel:
    party: str
    kind: str
    dim: int

    def __post_init__(self):
        if self.kind not in (PSEUDOSPIN, MODE):
            raise ValueError(f"unknown factor kind {self.kind!r}")
        if self.kind == PSEUDOSPIN and self.dim != 2:
            raise ValueError("pseudospin factors have dimension 2")
        if self.dim < 1:
            raise ValueError("factor dimension must be positive")

    @property
    def key(self) -> tuple[str, str]:
        return (self.party, self.kind)

    def __str__(self):
        return f"{self.party}.{self.kind}[{self.dim}]"


def photon_factors(party: str, M: int) -> tuple[FactorLabel, FactorLabel]:
    """The ``(pseudospin, mode)`` factor pair of one photon."""
    return (FactorLabel(party, PSEUDOSPIN, 2), FactorLabel(party, MODE, M))


def _check_unique(factors: Sequence[FactorLabel]):
    keys = [f.key for f in factors]
    if len(set(keys)) != len(keys):
        raise LabelCollision(f"duplicate factor labels in {[str(f) for f in factors]}")


def _total_dim(factors: Sequence[FactorLabel]) -> int:
    return int(np.prod([f.dim for f in factors], dtype=np.int64))


@dataclass(frozen=True, eq=False)
class LabeledState:
    """Pure state over an ordered list of labeled factors."""

    factors: tuple[FactorLabel, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        factors = tuple(self.factors)
        object.__setattr__(self, "factors", factors)
        _check_unique(factors)
        amp = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amp.size != _total_dim(factors):
            raise ShapeMismatch(f"amplitude size {amp.size} does not match factors {_total_dim(factors)}")
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"pure state must have unit norm, got {norm!r}")
        amp.flags.writeable = False
        object.__setattr__(self, "amplitudes", amp)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.dim for f in self.factors)

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)


@dataclass(frozen=True, eq=False)
class CoefficientState:
    """``rho = sum_mn c_mn |v_m><v_n|`` over orthonormal vectors ``v_m``.

    ``vectors`` has shape ``(k, D)``; ``coefficients`` is the ``k x k``
    Hermitian PSD unit-trace matrix ``c``.
    """

    factors: tuple[FactorLabel, ...]
    vectors: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self):
        factors = tuple(self.factors)
        object.__setattr__(self, "factors", factors)
        _check_unique(factors)
        vec = np.atleast_2d(np.asarray(self.vectors, dtype=complex))
        c = np.asarray(self.coefficients, dtype=complex)
        if vec.shape[1] != _total_dim(factors):
            raise ShapeMismatch("vector length does not match factors")
        if c.shape != (vec.shape[0], vec.shape[0]):
            raise ShapeMismatch("coefficient matrix must be k x k for k vectors")
        if np.max(np.abs(c - c.conj().T)) > 1e-10:
            raise NonHermitian("coefficient matrix is not Hermitian")
        if abs(np.trace(c).real - 1.0) > 1e-10:
            raise ValueError("coefficient matrix must have unit trace")
        if np.linalg.eigvalsh(c).min() < -1e-10:
            raise ValueError("coefficient matrix must be PSD")
        vec.flags.writeable = False
        c.flags.writeable = False
        object.__setattr__(self, "vectors", vec)
        object.__setattr__(self, "coefficients", c)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.dim for f in self.factors)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Density operator with factor labels.

    Exactly one storage is populated:

    - ``dense``: ``matrix`` (D x D)
    - ``factored``: ``weights`` (k,) and ``vectors`` (k, D), rho = sum_i w_i v_i v_i^dag
    - ``product``: ``parts``, rho = parts[0] (x) parts[1] (x) ...
    - ``mixture``: ``terms`` of (weight, DensityMatrix)

    Use the classmethod constructors rather than calling this directly.
    """

    factors: tuple[FactorLabel, ...]
    storage: str
    matrix: np.ndarray | None = None
    weights: np.ndarray | None = None
    vectors: np.ndarray | None = None
    parts: tuple["DensityMatrix", ...] = ()
    terms: tuple[tuple[float, "DensityMatrix"], ...] = ()

    # ---- constructors -------------------------------------------------
    @classmethod
    def dense(cls, factors: Sequence[FactorLabel], matrix) -> "DensityMatrix":
        factors = tuple(factors)
        _check_unique(factors)
        mat = np.array(matrix, dtype=complex)
        D = _total_dim(factors)
        if mat.shape != (D, D):
            raise ShapeMismatch(f"matrix shape {mat.shape} does not match factor dimension {D}")
        mat.flags.writeable = False
        return cls(factors, "dense", matrix=mat)

    @classmethod
    def factored(cls, factors: Sequence[FactorLabel], weights, vectors) -> "DensityMatrix":
        factors = tuple(factors)
        _check_unique(factors)
        w = np.array(weights, dtype=float).reshape(-1)
        v = np.array(vectors, dtype=complex).reshape(w.size, -1)
        if v.shape[1] != _total_dim(factors):
            raise ShapeMismatch("vector length does not match factors")
        if np.any(w < 0):
            raise ValueError("ensemble weights must be nonnegative")
        w.flags.writeable = False
        v.flags.writeable = False
        return cls(factors, "factored", weights=w, vectors=v)

    @classmethod
    def product(cls, parts: Iterable["DensityMatrix"]) -> "DensityMatrix":
        flat: list[DensityMatrix] = []
        for p in parts:
            flat.extend(p.parts if p.storage == "product" else (p,))
        factors = tuple(f for p in flat for f in p.factors)
        _check_unique(factors)
        return cls(factors, "product", parts=tuple(flat))

    @classmethod
    def mixture(cls, terms: Iterable[tuple[float, "DensityMatrix"]]) -> "DensityMatrix":
        flat: list[tuple[float, DensityMatrix]] = []
        for w, t in terms:
            if w < 0:
                raise ValueError("mixture weights must be nonnegative")
            if w == 0:
                continue
            if t.storage == "mixture":
                flat.extend((w * w2, t2) for w2, t2 in t.terms)
            else:
                flat.append((float(w), t))
        if not flat:
            raise ValueError("mixture needs at least one term with positive weight")
        keys = [f.key for f in flat[0][1].factors]
        for _, t in flat:
            if [f.key for f in t.factors] != keys or t.dims != flat[0][1].dims:
                raise ShapeMismatch("mixture terms must share the same factors")
        return cls(flat[0][1].factors, "mixture", terms=tuple(flat))

    @classmethod
    def from_pure(cls, state: LabeledState) -> "DensityMatrix":
        return cls.factored(state.factors, [1.0], state.amplitudes[None, :])

    @classmethod
    def from_coefficients(cls, state: CoefficientState) -> "DensityMatrix":
        lam, V = np.linalg.eigh(state.coefficients)
        keep = lam > 1e-15
        vecs = V[:, keep].T @ state.vectors
        return cls.factored(state.factors, lam[keep], vecs)

    # ---- basic properties --------------------------------------------
    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.dim for f in self.factors)

    @property
    def dim(self) -> int:
        return _total_dim(self.factors)

    def trace(self) -> float:
        if self.storage == "dense":
            return float(np.trace(self.matrix).real)
        if self.storage == "factored":
            return float(np.sum(self.weights * np.sum(np.abs(self.vectors) ** 2, axis=1)))
        if self.storage == "product":
            return float(np.prod([p.trace() for p in self.parts]))
        return float(sum(w * t.trace() for w, t in self.terms))

    def to_dense(self, limit: int = DENSE_LIMIT) -> np.ndarray:
        """Materialize the full matrix; refuses above ``limit`` dimensions."""
        if self.dim > limit:
            raise MemoryError(f"refusing to densify a {self.dim}-dimensional operator (limit {limit})")
        if self.storage == "dense":
            return np.array(self.matrix)
        if self.storage == "factored":
            vs = self.vectors.T * np.sqrt(self.weights)
            return vs @ vs.conj().T
        if self.storage == "product":
            out = np.ones((1, 1), dtype=complex)
            for p in self.parts:
                out = np.kron(out, p.to_dense(limit))
            return out
        return sum(w * t.to_dense(limit) for w, t in self.terms)

    def index(self, label) -> int:
        return _resolve(self.factors, [label])[0]


def as_density(state) -> DensityMatrix:
    """Wrap a pure or coefficient-form state as a (factored) DensityMatrix."""
    if isinstance(state, DensityMatrix):
        return state
    if isinstance(state, LabeledState):
        return DensityMatrix.from_pure(state)
    if isinstance(state, CoefficientState):
        return DensityMatrix.from_coefficients(state)
    raise TypeError(f"cannot interpret {type(state).__name__} as a density matrix")


def maximally_mixed(factors: Sequence[FactorLabel]) -> DensityMatrix:
    """``I/dim`` stored as a product of per-factor ``I/d`` blocks."""
    parts = [DensityMatrix.dense([f], np.eye(f.dim) / f.dim) for f in factors]
    return parts[0] if len(parts) == 1 else DensityMatrix.product(parts)


# ---------------------------------------------------------------------------
# spectral decomposition and validation
# ---------------------------------------------------------------------------

def spectral_decompose(H, tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and orthonormal eigenvectors (columns) of ``H``."""
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ShapeMismatch("spectral_decompose needs a square matrix")
    dev = np.max(np.abs(H - H.conj().T)) if H.size else 0.0
    if dev > tol:
        raise NonHermitian(f"matrix deviates from Hermitian by {dev:.3e}")
    w, v = np.linalg.eigh((H + H.conj().T) / 2)
    return w[::-1].copy(), v[:, ::-1].copy()


@dataclass(frozen=True)
class ValidationReport:
    hermiticity_residual: float
    min_eigenvalue: float
    trace_deviation: float
    tol: float

    @property
    def passed(self) -> bool:
        return (
            self.hermiticity_residual <= self.tol
            and self.min_eigenvalue >= -self.tol
            and self.trace_deviation <= self.tol
        )


def _structural_bounds(rho: DensityMatrix) -> tuple[float, float]:
    """(hermiticity residual, lower bound on min eigenvalue) without densifying."""
    if rho.storage == "dense":
        m = rho.matrix
        return float(np.max(np.abs(m - m.conj().T))), float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0])
    if rho.storage == "factored":
        return 0.0, float(min(0.0, rho.weights.min())) if rho.weights.size else 0.0
    if rho.storage == "product":
        res = [_structural_bounds(p) for p in rho.parts]
        return max(r[0] for r in res), min(r[1] for r in res)
    res = [(w, _structural_bounds(t)) for w, t in rho.terms]
    return max(r[0] for _, r in res), sum(w * min(0.0, r[1]) for w, r in res)


def validate_density(rho, tol: float = 1e-10) -> ValidationReport:
    """Hermiticity residual, minimum eigenvalue and trace deviation of ``rho``.

    Accepts a DensityMatrix or a bare square array. Operators small enough to
    densify are checked exactly; larger structured ones use bounds derived
    from their storage.
    """
    if not isinstance(rho, DensityMatrix):
        m = np.asarray(rho, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ShapeMismatch("validate_density needs a square matrix")
        herm = float(np.max(np.abs(m - m.conj().T)))
        mine = float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0])
        return ValidationReport(herm, mine, abs(float(np.trace(m).real) - 1.0), tol)
    if rho.dim <= DENSE_LIMIT:
        m = rho.to_dense()
        herm = float(np.max(np.abs(m - m.conj().T)))
        mine = float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0])
    else:
        herm, mine = _structural_bounds(rho)
    return ValidationReport(herm, mine, abs(rho.trace() - 1.0), tol)


def clamp_psd(rho: DensityMatrix, tol: float = 1e-10) -> DensityMatrix:
    """Zero eigenvalues in ``[-tol, 0)`` of a dense matrix and renormalize the trace."""
    w, v = spectral_decompose(rho.to_dense())
    if w.min() < -tol:
        raise ValueError(f"eigenvalue {w.min():.3e} is below the PSD tolerance")
    w = np.clip(w, 0.0, None)
    w = w / w.sum()
    return DensityMatrix.dense(rho.factors, (v * w) @ v.conj().T)


# ---------------------------------------------------------------------------
# partial trace and tensor product
# ---------------------------------------------------------------------------

def _resolve(factors: Sequence[FactorLabel], keep) -> list[int]:
    lookup = {f.key: i for i, f in enumerate(factors)}
    idx = []
    for k in keep:
        key = k.key if isinstance(k, FactorLabel) else tuple(k)
        if key not in lookup:
            raise UnknownFactor(f"factor {key} not present in {[str(f) for f in factors]}")
        if isinstance(k, FactorLabel) and k.dim != factors[lookup[key]].dim:
            raise UnknownFactor(f"factor {k} has dimension {factors[lookup[key]].dim} in this state")
        idx.append(lookup[key])
    if len(set(idx)) != len(idx):
        raise LabelCollision("a factor is requested twice")
    return idx


def _dense_reduce(matrix: np.ndarray, dims: Sequence[int], keep_idx: Sequence[int]) -> np.ndarray:
    n = len(dims)
    t = matrix.reshape(tuple(dims) * 2)
    row = list(range(n))
    col = [i + n if i in keep_idx else i for i in range(n)]
    out = [i for i in keep_idx] + [i + n for i in keep_idx]
    dk = int(np.prod([dims[i] for i in keep_idx]))
    return np.einsum(t, row + col, out).reshape(dk, dk)


def _factored_reduce(weights, vectors, dims, keep_idx) -> np.ndarray:
    n = len(dims)
    k = vectors.shape[0]
    traced = [i for i in range(n) if i not in keep_idx]
    t = (vectors * np.sqrt(weights)[:, None]).reshape((k,) + tuple(dims))
    t = t.transpose([i + 1 for i in keep_idx] + [0] + [i + 1 for i in traced])
    dk = int(np.prod([dims[i] for i in keep_idx]))
    y = t.reshape(dk, -1)
    return y @ y.conj().T


def _reduce_to_dense(rho: DensityMatrix, keep_idx: list[int]) -> np.ndarray:
    dims = rho.dims
    if rho.storage == "dense":
        return _dense_reduce(rho.matrix, dims, keep_idx)
    if rho.storage == "factored":
        return _factored_reduce(rho.weights, rho.vectors, dims, keep_idx)
    if rho.storage == "mixture":
        return sum(w * _reduce_to_dense(t, keep_idx) for w, t in rho.terms)
    # product: reduce every part, kron in part order, then permute to keep order
    offsets = np.cumsum([0] + [len(p.factors) for p in rho.parts])
    blocks, order, scale = [], [], 1.0
    for p, off in zip(rho.parts, offsets):
        local = [i - off for i in sorted(keep_idx) if off <= i < off + len(p.factors)]
        if not local:
            scale *= p.trace()
            continue
        blocks.append(_reduce_to_dense(p, local))
        order.extend(off + i for i in local)
    out = np.ones((1, 1), dtype=complex)
    for b in blocks:
        out = np.kron(out, b)
    out = out * scale
    if order != list(keep_idx):
        kd = [dims[i] for i in order]
        perm = [order.index(i) for i in keep_idx]
        n = len(order)
        t = out.reshape(tuple(kd) * 2).transpose(perm + [p + n for p in perm])
        dk = out.shape[0]
        out = t.reshape(dk, dk)
    return out


def _permuted(rho: DensityMatrix, idx: list[int]) -> DensityMatrix:
    factors = tuple(rho.factors[i] for i in idx)
    if idx == list(range(len(rho.factors))):
        return rho
    if rho.storage == "factored":
        k = rho.vectors.shape[0]
        v = rho.vectors.reshape((k,) + rho.dims).transpose([0] + [i + 1 for i in idx]).reshape(k, -1)
        return DensityMatrix.factored(factors, rho.weights, v)
    n = len(idx)
    m = rho.to_dense().reshape(rho.dims * 2).transpose(idx + [i + n for i in idx])
    return DensityMatrix.dense(factors, m.reshape(rho.dim, rho.dim))


def partial_trace(state, keep) -> DensityMatrix:
    """Reduced density matrix over the factors in ``keep``, in that order.

    ``keep`` entries are FactorLabel objects or ``(party, kind)`` tuples.
    Structured storage is contracted directly; the joint operator is never
    materialized.
    """
    rho = as_density(state)
    keep = list(keep)
    if not keep:
        raise ValueError("keep must name at least one factor")
    idx = _resolve(rho.factors, keep)
    if len(idx) == len(rho.factors):
        return _permuted(rho, idx)
    factors = tuple(rho.factors[i] for i in idx)
    return DensityMatrix.dense(factors, _reduce_to_dense(rho, idx))


def tensor_product(a, b, lazy: bool = False) -> DensityMatrix:
    """``a (x) b``. Factored inputs give factored output unless ``lazy``."""
    a, b = as_density(a), as_density(b)
    keys = {f.key for f in a.factors}
    if keys & {f.key for f in b.factors}:
        raise LabelCollision("tensor_product needs disjoint factor labels")
    factors = a.factors + b.factors
    if not lazy:
        if a.storage == "dense" and b.storage == "dense":
            return DensityMatrix.dense(factors, np.kron(a.matrix, b.matrix))
        if a.storage == "factored" and b.storage == "factored":
            w = np.outer(a.weights, b.weights).reshape(-1)
            v = np.einsum("ia,jb->ijab", a.vectors, b.vectors).reshape(w.size, -1)
            return DensityMatrix.factored(factors, w, v)
    return DensityMatrix.product([a, b])

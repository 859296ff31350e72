import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mixsky.errors import LabelCollision, NonHermitian, ShapeMismatch, UnknownFactor
from mixsky.qstate import (
    MODE,
    PSEUDOSPIN,
    CoefficientState,
    DensityMatrix,
    FactorLabel,
    LabeledState,
    ModeGrid,
    clamp_psd,
    maximally_mixed,
    partial_trace,
    photon_factors,
    spectral_decompose,
    tensor_product,
    validate_density,
)
from mixsky.synth import SkyrmionSpec, auxiliary_matrix, build_single_photon_skyrmion


def naive_partial_trace(mat, dims, keep):
    """Index-loop partial trace; result ordered as ``keep``."""
    n = len(dims)
    traced = [i for i in range(n) if i not in keep]
    kd = [dims[i] for i in keep]
    out = np.zeros((int(np.prod(kd)),) * 2, dtype=complex)
    t = mat.reshape(tuple(dims) * 2)
    for ridx in np.ndindex(*kd):
        for cidx in np.ndindex(*kd):
            acc = 0.0
            for tidx in np.ndindex(*[dims[i] for i in traced]):
                r = [0] * n
                c = [0] * n
                for pos, k in enumerate(keep):
                    r[k], c[k] = ridx[pos], cidx[pos]
                for pos, k in enumerate(traced):
                    r[k] = c[k] = tidx[pos]
                acc += t[tuple(r) + tuple(c)]
            out[np.ravel_multi_index(ridx, kd), np.ravel_multi_index(cidx, kd)] = acc
    return out


def random_factored(rng, factors, rank):
    D = int(np.prod([f.dim for f in factors]))
    v = rng.normal(size=(rank, D)) + 1j * rng.normal(size=(rank, D))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    w = rng.random(rank)
    return DensityMatrix.factored(factors, w / w.sum(), v)


FACTORS = (FactorLabel("A", PSEUDOSPIN, 2), FactorLabel("A", MODE, 3), FactorLabel("B", PSEUDOSPIN, 2), FactorLabel("B", MODE, 2))


def test_grid_is_mirror_symmetric():
    for M in (3, 11, 64, 80):
        x = ModeGrid(M).x
        assert np.array_equal(x, -x[::-1])
        assert x[0] == -1.0 and x[-1] == 1.0


def test_labels_must_be_unique():
    f = photon_factors("A", 3)
    with pytest.raises(LabelCollision):
        DensityMatrix.dense(f + f[:1], np.eye(12) / 12)


def test_pure_state_needs_unit_norm():
    with pytest.raises(ValueError):
        LabeledState(photon_factors("A", 2), np.ones(4))


def test_spectral_decompose_trivial_cases():
    lam, _ = spectral_decompose(np.eye(2))
    assert np.allclose(lam, [1, 1])
    lam, V = spectral_decompose(np.diag([3.0, -1.0]))
    assert np.allclose(lam, [3, -1])
    assert np.allclose(np.abs(V), np.eye(2))


def test_spectral_decompose_rejects_non_hermitian():
    with pytest.raises(NonHermitian):
        spectral_decompose(np.array([[0, 1], [0, 0]]))


def test_spectral_round_trip_on_auxiliary_matrix():
    A = auxiliary_matrix(SkyrmionSpec(1, ModeGrid(32)))
    lam, V = spectral_decompose(A)
    assert np.max(np.abs((V * lam) @ V.conj().T - A)) < 1e-8


def test_validate_examples():
    assert validate_density(np.eye(8) / 8).passed
    rep = validate_density(np.eye(8) / 8)
    assert rep.hermiticity_residual == 0 and rep.trace_deviation < 1e-15
    A = auxiliary_matrix(SkyrmionSpec(1, ModeGrid(16)))
    assert validate_density(A / np.trace(A).real).min_eigenvalue < 0
    assert not validate_density(A / np.trace(A).real).passed
    rho = build_single_photon_skyrmion(SkyrmionSpec(1, ModeGrid(16)), method="analytic_q1")
    assert validate_density(rho).passed


def test_clamp_psd_removes_tiny_negative_eigenvalues():
    m = np.diag([0.5 + 1e-12, 0.5, -1e-12])
    rho = clamp_psd(DensityMatrix.dense([FactorLabel("A", MODE, 3)], m))
    assert validate_density(rho).passed
    assert np.linalg.eigvalsh(rho.matrix).min() >= -1e-15


def test_partial_trace_of_product_is_exact():
    rng = np.random.default_rng(0)
    a = random_factored(rng, photon_factors("A", 3), 2)
    b = random_factored(rng, photon_factors("B", 2), 3)
    prod = tensor_product(a, b, lazy=True)
    assert np.array_equal(partial_trace(prod, a.factors).matrix, a.to_dense() * b.trace())


def test_bell_pair_reduces_to_identity_half():
    f = (FactorLabel("A", PSEUDOSPIN, 2), FactorLabel("B", PSEUDOSPIN, 2))
    psi = LabeledState(f, np.array([1, 0, 0, 1]) / np.sqrt(2))
    assert np.allclose(partial_trace(psi, [f[0]]).matrix, np.eye(2) / 2, atol=1e-15)


def test_tensor_products():
    half = [DensityMatrix.dense([FactorLabel(p, PSEUDOSPIN, 2)], np.eye(2) / 2) for p in "AB"]
    assert np.allclose(tensor_product(*half).matrix, np.eye(4) / 4)
    e = [DensityMatrix.from_pure(LabeledState([FactorLabel(p, PSEUDOSPIN, 2)], np.array([1.0, 0]))) for p in "AB"]
    assert np.linalg.matrix_rank(tensor_product(*e).to_dense()) == 1
    M = 8
    u = [DensityMatrix.dense(photon_factors(p, M), np.eye(2 * M) / (2 * M)) for p in "AB"]
    big = tensor_product(*u)
    assert np.allclose(big.matrix, np.eye(4 * M * M) / (2 * M) ** 2)
    with pytest.raises(LabelCollision):
        tensor_product(u[0], u[0])


def test_unknown_factor():
    rho = maximally_mixed(photon_factors("A", 2))
    with pytest.raises(UnknownFactor):
        partial_trace(rho, [("B", MODE)])


def test_coefficient_state_checks():
    f = photon_factors("A", 2)
    vecs = np.eye(4)[:2]
    CoefficientState(f, vecs, np.eye(2) / 2)
    with pytest.raises(ValueError):
        CoefficientState(f, vecs, np.array([[0.5, 1.0], [1.0, 0.5]]))
    with pytest.raises(ShapeMismatch):
        CoefficientState(f, vecs, np.eye(3) / 3)


def test_mixture_and_product_trace():
    f = photon_factors("A", 3)
    mm = maximally_mixed(f)
    assert mm.storage == "product"
    assert abs(mm.trace() - 1) < 1e-15
    mix = DensityMatrix.mixture([(0.25, mm), (0.75, DensityMatrix.dense(f, np.eye(6) / 6))])
    assert np.allclose(mix.to_dense(), np.eye(6) / 6)


@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.sampled_from([[0], [1, 3], [2, 0], [3, 1, 0], [0, 1, 2, 3]]))
def test_factored_trace_matches_naive(seed, rank, keep):
    rng = np.random.default_rng(seed)
    rho = random_factored(rng, FACTORS, rank)
    got = partial_trace(rho, [FACTORS[i] for i in keep]).to_dense()
    want = naive_partial_trace(rho.to_dense(), [f.dim for f in FACTORS], keep)
    assert np.max(np.abs(got - want)) < 1e-12


@given(st.integers(0, 2**32 - 1), st.floats(0, 1))
def test_partial_trace_commutes_with_mixing(seed, eps):
    rng = np.random.default_rng(seed)
    a, b = random_factored(rng, FACTORS, 2), random_factored(rng, FACTORS, 3)
    keep = [FACTORS[0], FACTORS[3]]
    mixed = DensityMatrix.mixture([(1 - eps, a), (eps, b)]) if 0 < eps < 1 else (a if eps == 0 else b)
    lhs = partial_trace(mixed, keep).matrix
    rhs = (1 - eps) * partial_trace(a, keep).matrix + eps * partial_trace(b, keep).matrix
    assert np.max(np.abs(lhs - rhs)) < 1e-12


@given(st.integers(0, 2**32 - 1))
def test_partial_traces_compose(seed):
    rng = np.random.default_rng(seed)
    rho = random_factored(rng, FACTORS, 3)
    step = partial_trace(partial_trace(rho, FACTORS[:2]), [FACTORS[1]])
    once = partial_trace(rho, [FACTORS[1]])
    assert np.max(np.abs(step.matrix - once.matrix)) < 1e-12


@given(st.integers(0, 2**32 - 1))
def test_outputs_are_valid_density_matrices(seed):
    rng = np.random.default_rng(seed)
    rho = random_factored(rng, FACTORS, 4)
    for keep in ([FACTORS[0]], FACTORS[:2], [FACTORS[3], FACTORS[0]]):
        assert validate_density(partial_trace(rho, keep)).passed

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mixsky.bipartite import build_two_photon, reduce_all_subspaces
from mixsky.errors import NotCoefficientForm, RankExceedsDimension, ShapeMismatch
from mixsky.noise import (
    DephasingSpec,
    WishartSpec,
    breakdown_threshold,
    dephase,
    depolarize,
    mix,
    pair_coefficient_state,
    philox,
    sweep,
    sweep_points,
    wishart_density,
)
from mixsky.qstate import DensityMatrix, ModeGrid, maximally_mixed, partial_trace, photon_factors, validate_density
from mixsky.synth import analytic_modes_q1
from mixsky.texture import skyrmion_number, stokes_from_density


@pytest.fixture(scope="module")
def pair11(modes11):
    return pair_coefficient_state(modes11)


def test_pair_state_matches_pure_construction(modes11, pair11):
    rho = DensityMatrix.from_coefficients(pair11)
    pure = DensityMatrix.from_pure(build_two_photon(modes11))
    assert np.max(np.abs(rho.to_dense(limit=10**5) - pure.to_dense(limit=10**5))) < 1e-12


def test_zero_dephasing_is_identity(pair11):
    out = dephase(pair11, DephasingSpec(0.0))
    assert np.max(np.abs(out.coefficients - pair11.coefficients)) <= 1e-15


def test_unit_dephasing_attenuation(pair11):
    out = dephase(pair11, DephasingSpec(1.0))
    assert out.coefficients[0, 1] / pair11.coefficients[0, 1] == pytest.approx(math.exp(-0.5), abs=1e-15)
    assert out.coefficients[0, 0] == pair11.coefficients[0, 0]


def test_mean_phase_rotates_cross_terms(pair11):
    out = dephase(pair11, DephasingSpec(0.5, mu=0.7))
    f = out.coefficients[0, 1] / pair11.coefficients[0, 1]
    assert f == pytest.approx(np.exp(0.7j - 0.125))
    assert out.coefficients[1, 0] == pytest.approx(np.conj(out.coefficients[0, 1]))


def test_dephase_needs_coefficient_form(modes11):
    with pytest.raises(NotCoefficientForm):
        dephase(build_two_photon(modes11), DephasingSpec(1.0))


@pytest.mark.parametrize("shots", [1000, 100000])
@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_monte_carlo_matches_analytic(pair11, shots, sigma):
    a = dephase(pair11, DephasingSpec(sigma))
    m = dephase(pair11, DephasingSpec(sigma, mode="monte_carlo", shots=shots, seed=11))
    assert np.max(np.abs(a.coefficients - m.coefficients)) < 5 / math.sqrt(shots)


def test_monte_carlo_is_reproducible(pair11):
    spec = DephasingSpec(1.3, mode="monte_carlo", shots=500, seed=5)
    assert np.array_equal(dephase(pair11, spec).coefficients, dephase(pair11, spec).coefficients)


def test_local_reductions_ignore_dephasing(modes11, pair11):
    base = reduce_all_subspaces(DensityMatrix.from_coefficients(pair11))
    for sigma in (0.5, 1.5, 3.0):
        red = reduce_all_subspaces(DensityMatrix.from_coefficients(dephase(pair11, DephasingSpec(sigma))))
        for name in ("local_A", "local_B"):
            assert np.max(np.abs(red[name].matrix - base[name].matrix)) < 1e-12


@given(st.floats(0, 4), st.floats(-3, 3))
def test_dephased_state_is_valid(sigma, mu):
    modes = analytic_modes_q1(ModeGrid(5), -1)
    rho = DensityMatrix.from_coefficients(dephase(pair_coefficient_state(modes), DephasingSpec(sigma, mu)))
    rep = validate_density(rho)
    assert rep.passed


def test_wishart_rank_one_is_pure():
    rho = wishart_density(WishartSpec(D=16, K=1, seed=2))
    dense = rho.to_dense()
    assert abs(np.trace(dense @ dense).real - 1) < 1e-12


def test_wishart_basic_properties():
    rho = wishart_density(WishartSpec(D=24, K=7, seed=1))
    rep = validate_density(rho)
    assert rep.passed and rep.trace_deviation < 1e-12
    assert np.linalg.matrix_rank(rho.to_dense(), tol=1e-10) == 7
    again = wishart_density(WishartSpec(D=24, K=7, seed=1))
    assert np.array_equal(rho.vectors, again.vectors) and np.array_equal(rho.weights, again.weights)
    with pytest.raises(RankExceedsDimension):
        wishart_density(WishartSpec(D=4, K=5))


def test_wishart_spectrum_flattens_with_rank():
    # sample-statistics oracle over 100 seeds: the spread of D * eigenvalues shrinks as K grows
    D = 32
    spreads = {}
    for K in (2, 8, 32):
        s = [np.std(np.linalg.eigvalsh(wishart_density(WishartSpec(D, K, seed=i)).to_dense())) * D for i in range(100)]
        spreads[K] = float(np.mean(s))
    assert spreads[2] > spreads[8] > spreads[32]


def test_mix_endpoints_and_shapes(modes11):
    pure = DensityMatrix.from_pure(build_two_photon(modes11))
    noise = wishart_density(WishartSpec(D=484, K=3, seed=0), pure.factors)
    assert mix(pure, noise, 0.0) is pure
    assert mix(pure, noise, 1.0) is noise
    mixed = mix(pure, noise, 0.4)
    assert mixed.storage == "factored" and abs(mixed.trace() - 1) < 1e-12
    with pytest.raises(ShapeMismatch):
        mix(pure, maximally_mixed(photon_factors("A", 11)), 0.5)


def test_depolarize_keeps_texture(modes11):
    pure = DensityMatrix.from_pure(build_two_photon(modes11))
    base = reduce_all_subspaces(pure)
    assert depolarize(pure, 0.0) is pure
    for eps in (0.1, 0.5, 0.99):
        red = reduce_all_subspaces(depolarize(pure, eps))
        for name in base:
            a, b = stokes_from_density(base[name]), stokes_from_density(red[name])
            assert np.max(np.abs(a.s - b.s)) < 1e-12
    same = mix(pure, maximally_mixed(pure.factors), 0.5)
    assert np.max(np.abs(partial_trace(same, pure.factors[:2]).matrix - partial_trace(depolarize(pure, 0.5), pure.factors[:2]).matrix)) < 1e-15


def test_philox_streams_depend_on_key():
    a = philox(1, "x", 0.5).random(4)
    assert np.array_equal(a, philox(1, "x", 0.5).random(4))
    assert not np.array_equal(a, philox(1, "x", 0.6).random(4))
    assert not np.array_equal(a, philox(2, "x", 0.5).random(4))


def test_sweep_grid_and_empty():
    assert sweep("dephasing", {}) == []
    assert sweep("wishart", {"m": [], "k": [4], "eps": [0.1]}) == []
    pts = sweep_points("dephasing", {"sigma": [0, 1], "m": [8, 12]})
    assert [(p["m"], p["sigma"]) for p in pts] == [(8, 0), (8, 1), (12, 0), (12, 1)]
    with pytest.raises(ValueError):
        sweep_points("dephasing", {"sigma": [0]})


def test_sweep_is_thread_independent():
    grid = {"m": [12], "k": [4, 64], "eps": [0.2, 0.8]}
    one = sweep("wishart", grid, seed=9, threads=1)
    many = sweep("wishart", grid, seed=9, threads=8)
    assert one == many


def test_sweep_records_point_errors():
    rows = sweep("wishart", {"m": [3], "k": [1000], "eps": [0.5]})
    assert rows[0]["error"].startswith("RankExceedsDimension")


def test_breakdown_threshold_helper():
    rows = [{"sigma": s, "residual": r, "error": ""} for s, r in ((0, 0.01), (1, 0.2), (1.5, 0.3), (2, 0.4))]
    assert breakdown_threshold(rows) == 1.5
    assert breakdown_threshold(rows[:2]) is None


def test_dephasing_local_charge_is_constant():
    rows = sweep("dephasing", {"m": [20], "sigma": [0, 1, 2, 3]}, observable="local_Q", method="integral")
    q = [r["Q_raw"] for r in rows]
    assert max(q) - min(q) < 1e-10


def test_depolarize_sweep_is_flat():
    rows = sweep("depolarize", {"m": [16], "eps": [0.0, 0.5, 0.9]})
    assert len({round(r["Q_raw"], 12) for r in rows}) == 1


def test_dephasing_charge_matches_direct(modes11):
    g = ModeGrid(11)
    pair = pair_coefficient_state(analytic_modes_q1(g, -1))
    red = reduce_all_subspaces(DensityMatrix.from_coefficients(dephase(pair, DephasingSpec(1.0))))
    direct = skyrmion_number(stokes_from_density(red["nonlocal_xA_sigmaB"])).Q_raw
    row = sweep("dephasing", {"m": [11], "sigma": [1.0]})[0]
    assert row["Q_raw"] == direct

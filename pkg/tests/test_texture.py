import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import naive_lattice_charge
from mixsky.errors import TooManyUndefinedPoints
from mixsky.qstate import DensityMatrix, LabeledState, ModeGrid, photon_factors
from mixsky.synth import SkyrmionSpec, auxiliary_matrix, build_single_photon_skyrmion
from mixsky.texture import (
    BLOCH,
    BUBBLE,
    NEEL,
    StokesField,
    classify_texture,
    filled_unit_field,
    skyrmion_number,
    stokes_from_density,
    stokes_from_matrix,
    stokes_from_wavefunction,
)


def basis_density(M, pol, x0):
    v = np.zeros(2 * M, dtype=complex)
    v[x0] = pol[0]
    v[M + x0] = pol[1]
    return DensityMatrix.from_pure(LabeledState(photon_factors("A", M), v / np.linalg.norm(v)))


def test_single_basis_state_is_north_pole_at_one_point():
    M = 5
    f = stokes_from_density(basis_density(M, (1, 0), 2))
    assert np.allclose(f.s[2, 2], [0, 0, 1])
    assert f.defined.sum() == 1


def test_diagonal_polarization_points_along_x():
    M = 5
    f = stokes_from_density(basis_density(M, (1, 1), 3))
    assert np.allclose(f.s[3, 3], [1, 0, 0])
    assert np.allclose([f.sx[3, 3], f.sy[3, 3], f.sz[3, 3]], np.array([1, 0, 0]) * f.s0[3, 3])


def test_product_wavefunction_texture():
    M = 4
    a = np.zeros(2 * M)
    a[1] = 1
    b = np.zeros(2 * M)
    b[2] = 1
    psi = LabeledState(photon_factors("A", M) + photon_factors("B", M), np.kron(a, b))
    f = stokes_from_wavefunction(psi)
    assert np.allclose(f.s[1, 2], [0, 0, 1])
    assert f.defined.sum() == 1


def test_sparse_field_is_rejected():
    f = stokes_from_density(basis_density(5, (1, 0), 2))
    with pytest.raises(TooManyUndefinedPoints):
        skyrmion_number(f)


def test_isolated_gap_is_filled():
    g = ModeGrid(16)
    A = auxiliary_matrix(SkyrmionSpec(1, g))
    f = stokes_from_matrix(A, g)
    sx, sy, sz = f.sx.copy(), f.sy.copy(), f.sz.copy()
    sx[5, 7] = sy[5, 7] = sz[5, 7] = 0.0
    holed = StokesField.from_components(g, sx, sy, sz)
    assert holed.undefined_fraction == pytest.approx(1 / 256)
    filled = filled_unit_field(holed)
    assert np.all(np.isfinite(filled))
    assert np.allclose(np.linalg.norm(filled, axis=-1), 1)
    assert skyrmion_number(holed).Q_rounded == -1


def test_constant_field_has_zero_charge():
    g = ModeGrid(12)
    one = np.ones((12, 12))
    rep = skyrmion_number(StokesField.from_components(g, 0 * one, 0 * one, one))
    assert rep.Q_raw == 0.0


def test_auxiliary_texture_charge_and_mirror():
    g = ModeGrid(64)
    f = stokes_from_matrix(auxiliary_matrix(SkyrmionSpec(1, g)), g)
    assert abs(skyrmion_number(f).Q_raw + 1) < 1e-3
    mirrored = StokesField.from_components(g, f.sx, -f.sy, f.sz)
    assert abs(skyrmion_number(mirrored).Q_raw - 1) < 1e-3


def test_lattice_charge_matches_lhuilier_oracle():
    g = ModeGrid(24)
    for l in (1, 2, -3):
        f = stokes_from_matrix(auxiliary_matrix(SkyrmionSpec(l, g)), g)
        assert skyrmion_number(f).Q_raw == pytest.approx(naive_lattice_charge(f.s), abs=1e-9)


def test_both_estimators_reported():
    g = ModeGrid(32)
    f = stokes_from_matrix(auxiliary_matrix(SkyrmionSpec(1, g)), g)
    lat, fd = skyrmion_number(f, "lattice"), skyrmion_number(f, "integral")
    assert lat.Q_lattice == fd.Q_lattice and lat.Q_integral == fd.Q_integral
    assert fd.Q_raw == fd.Q_integral and lat.Q_raw == lat.Q_lattice
    with pytest.raises(ValueError):
        skyrmion_number(f, "spline")


def test_boundary_diagnostics():
    g = ModeGrid(32)
    rep = skyrmion_number(stokes_from_matrix(auxiliary_matrix(SkyrmionSpec(1, g)), g))
    assert rep.boundary_deviation < 0.2 and not rep.boundary_flag
    # a profile radius beyond the grid leaves the boundary short of the south pole
    wide = skyrmion_number(stokes_from_matrix(auxiliary_matrix(SkyrmionSpec(1, g, r0=3.0)), g))
    assert wide.boundary_flag


def test_classification_of_designed_textures():
    g = ModeGrid(64)
    neel = classify_texture(stokes_from_matrix(auxiliary_matrix(SkyrmionSpec(1, g)), g))
    bloch = classify_texture(stokes_from_matrix(auxiliary_matrix(SkyrmionSpec(1, g, phi0=math.pi / 2)), g))
    assert neel.texture_class == NEEL and abs(neel.helicity) < 1e-6
    assert bloch.texture_class == BLOCH


def test_two_domain_field_is_bubble():
    g = ModeGrid(20)
    X, Xp = np.meshgrid(g.x, g.x, indexing="ij")
    sz = np.where(np.hypot(X, Xp) < 0.6, 1.0, -1.0)
    zero = np.zeros_like(sz)
    assert classify_texture(StokesField.from_components(g, zero, zero, sz)).texture_class == BUBBLE


def test_conjugation_flips_sy_and_charge():
    g = ModeGrid(48)
    rho = build_single_photon_skyrmion(SkyrmionSpec(1, g), method="analytic_q1")
    conj = DensityMatrix.dense(rho.factors, rho.to_dense().conj())
    f, fc = stokes_from_density(rho), stokes_from_density(conj)
    assert np.max(np.abs(fc.sy + f.sy)) < 1e-10
    assert np.max(np.abs(fc.sx - f.sx)) < 1e-10
    assert abs(skyrmion_number(fc).Q_raw + skyrmion_number(f).Q_raw) < 1e-3


def test_integral_estimate_converges_under_refinement():
    errs = []
    for M in (16, 32, 64, 128):
        g = ModeGrid(M)
        errs.append(abs(skyrmion_number(stokes_from_matrix(auxiliary_matrix(SkyrmionSpec(1, g)), g), "integral").Q_raw + 1))
    assert all(a > b for a, b in zip(errs, errs[1:]))


@given(st.floats(0.0, 0.999), st.sampled_from([0, 1]))
def test_depolarization_leaves_unit_field_unchanged(eps, method):
    g = ModeGrid(11)
    rho = build_single_photon_skyrmion(SkyrmionSpec(1, g), method=["analytic_q1", "spectral"][method]).to_dense()
    dep = (1 - eps) * rho + eps * np.eye(22) / 22
    f = stokes_from_matrix(rho, g)
    fd = stokes_from_matrix(dep, g)
    assert np.max(np.abs(fd.s - f.s)) < 1e-12
    # the raw Stokes arrays scale uniformly by the surviving weight
    for a, b in ((fd.sx, f.sx), (fd.sy, f.sy), (fd.sz, f.sz), (fd.s0, f.s0)):
        assert np.max(np.abs(a - (1 - eps) * b)) < 1e-12

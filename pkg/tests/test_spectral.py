import math

import numpy as np
import pytest
from scipy.linalg import eigvalsh

from mchlab.errors import DegenerateInput, SpeedOutOfWindow
from mchlab.fields import GridField, sample_one_soliton, sample_two_soliton
from mchlab.functionals import lagrange_multipliers
from mchlab.spectral import (assemble_form, assemble_L, bottom_spectrum, count_sign_changes,
                             essential_edge, kernel_directions, operator_coefficients,
                             reciprocal_wronskian, spectrum_box, two_soliton_spectrum,
                             wronskian_sign_changes, _lower_bound)
from mchlab.soliton import _pair


LAM = lagrange_multipliers(5.0, 4.0, 1.0)


def box_field(params, t, n, periodic=False):
    centre, half = spectrum_box(params, t)
    h = 2 * half / (n - 1)
    return sample_two_soliton(params, t, centre - half, h, n, periodic=periodic)


def second_difference(n, h):
    return (np.diag(-2 * np.ones(n)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)) / h**2


def fourier_eigenvalues(field, lambdas, count):
    """Low eigenvalues of the same quadratic form with Fourier differentiation matrices."""
    n = field.n
    a, w, b = operator_coefficients(field, lambdas)
    k = 2 * np.pi * np.fft.fftfreq(n, d=field.h)
    eye = np.eye(n)
    D1 = np.real(np.fft.ifft(1j * k[:, None] * np.fft.fft(eye, axis=0), axis=0))
    D2 = np.real(np.fft.ifft(-(k**2)[:, None] * np.fft.fft(eye, axis=0), axis=0))
    L = D2.T @ (a[:, None] * D2) - D1.T @ (w[:, None] * D1) + np.diag(b)
    return eigvalsh(0.5 * (L + L.T), subset_by_index=[0, count - 1])


# ---------------------------------------------------------------- assembly


def test_operator_is_exactly_symmetric(params):
    op = assemble_L(box_field(params, 0.0, 512), LAM)
    dense = op.to_dense()
    assert np.array_equal(dense, dense.T)


def test_background_operator_factorises():
    kappa, c1, c2, n, h = 1.0, 5.0, 4.0, 200, 0.3
    fld = GridField(0.0, h, np.full(n, kappa), kappa, derivs=(np.zeros(n),) * 4)
    op = assemble_L(fld, lagrange_multipliers(c1, c2, kappa))
    a1 = (c1 - 3 * kappa**2) / (c1 - kappa**2)
    a2 = (c2 - 3 * kappa**2) / (c2 - kappa**2)
    D2 = second_difference(n, h)
    eye = np.eye(n)
    ref = kappa**-7 * (-D2 + a1 * eye) @ (-D2 + a2 * eye)
    np.testing.assert_allclose(op.to_dense(), ref, atol=1e-12 * np.max(np.abs(ref)))


def test_hinged_biharmonic_eigenvalues():
    errs = []
    for N in (99, 199):
        h = math.pi / (N + 1)
        op = assemble_form(np.ones(N), np.zeros(N), np.zeros(N), h, h)
        vals = bottom_spectrum(op, 3).eigenvalues
        errs.append(np.abs(vals - [1, 16, 81]))
    assert np.all(errs[1] < 0.02 * np.array([1, 16, 81]))
    np.testing.assert_allclose(errs[0] / errs[1], 4.0, rtol=0.05)


def test_banded_matches_dense(params):
    op = assemble_L(box_field(params, 0.0, 400), LAM)
    banded = bottom_spectrum(op, 6).eigenvalues
    dense = eigvalsh(op.to_dense())[:6]
    np.testing.assert_allclose(banded, dense, atol=1e-11)


def test_eigenvectors_match_eigenvalues(params):
    op = assemble_L(box_field(params, 0.0, 1024), LAM)
    rep, vecs = bottom_spectrum(op, 4, vectors=True)
    assert vecs.shape == (1024, 4)
    residual = op.to_dense() @ vecs - vecs * rep.eigenvalues
    assert np.max(np.abs(residual)) < 1e-8


def test_lowest_eigenvalue_above_gershgorin_bound(params):
    op = assemble_L(box_field(params, 0.0, 1024), LAM)
    assert bottom_spectrum(op, 1).eigenvalues[0] > _lower_bound(op)


# ---------------------------------------------------------- essential edge


def test_essential_edge_reference():
    assert essential_edge(5.0, 4.0, 1.0) == pytest.approx(1 / 6, rel=1e-15)
    assert essential_edge(5.0, 3.0 + 1e-12, 1.0) < 1e-11
    with pytest.raises(SpeedOutOfWindow):
        essential_edge(5.0, 9.0, 1.0)


def test_background_spectrum_sits_at_edge():
    n, h = 2000, 0.1
    fld = GridField(0.0, h, np.ones(n), 1.0, derivs=(np.zeros(n),) * 4)
    rep = bottom_spectrum(assemble_L(fld, LAM), 4, edge=essential_edge(5.0, 4.0, 1.0))
    assert rep.n_negative == 0 and rep.n_kernel == 0
    assert rep.essential_edge <= rep.eigenvalues[0] < 1.01 * rep.essential_edge


# ---------------------------------------------------------- 2-soliton counts


@pytest.mark.parametrize("t", [-20.0, 0.0, 20.0])
def test_two_soliton_counts(params, t):
    rep = two_soliton_spectrum(params, t, 4096)
    assert (rep.n_negative, rep.n_kernel) == (1, 2)


def test_negative_count_grid_stable(params):
    counts = [two_soliton_spectrum(params, 0.0, n).n_negative for n in (2048, 4096, 8192)]
    assert counts == [1, 1, 1]


def test_matches_fourier_collocation(params):
    # an independent discretization of the same operator agrees on the low spectrum
    centre, _ = spectrum_box(params, 0.0)
    n, half = 768, 50.0
    per = sample_two_soliton(params, 0.0, centre - half, 2 * half / n, n, periodic=True)
    oracle = fourier_eigenvalues(per, LAM, 6)
    fd = two_soliton_spectrum(params, 0.0, 4096, count=6).eigenvalues
    np.testing.assert_allclose(fd, oracle, atol=2e-4)


def test_internal_mode_belongs_to_fast_soliton():
    # the small positive eigenvalue persists for the isolated fast soliton
    n, half = 768, 50.0
    fld = sample_one_soliton(5.0, 1.0, 0.0, -half, 2 * half / n, n, periodic=True)
    vals = fourier_eigenvalues(fld, LAM, 3)
    assert abs(vals[0]) < 1e-8
    assert 0 < vals[1] < 0.5 * essential_edge(5.0, 4.0, 1.0)


# ------------------------------------------------------- kernel directions


def kernel_grid(params, t, n):
    centre, half = spectrum_box(params, t)
    h = 2 * half / (n - 1)
    return centre - half, h


def test_kernel_analytic_matches_finite_differences(params):
    x0, h = kernel_grid(params, 0.0, 1024)
    a1, a2, da1, da2 = kernel_directions(params, 0.0, x0, h, 1024, with_x=True)
    f1, f2, df1, df2 = kernel_directions(params, 0.0, x0, h, 1024, method="fd", with_x=True)
    for a, f in ((a1, f1), (a2, f2), (da1, df1), (da2, df2)):
        assert np.max(np.abs(a - f)) < 1e-8 * np.max(np.abs(a))


def test_kernel_rayleigh_quotients_decay_quadratically(params):
    centre, half = spectrum_box(params, 0.0)
    quotients = []
    for n in (1024, 2048, 4096):
        h = 2 * half / (n - 1)
        op = assemble_L(sample_two_soliton(params, 0.0, centre - half, h, n), LAM)
        mus = kernel_directions(params, 0.0, centre - half, h, n)
        quotients.append([abs(op.quadratic_form(mu)) / (float(mu @ mu) * h) for mu in mus])
    q = np.array(quotients)
    ratios = q[:-1] / q[1:]
    assert np.all((ratios > 3.5) & (ratios < 4.5))


def test_kernel_unknown_method(params):
    with pytest.raises(ValueError):
        kernel_directions(params, 0.0, -10.0, 0.1, 100, method="spline")


# -------------------------------------------------------------- Wronskian


def test_gaussian_wronskian_has_no_sign_change():
    x = np.linspace(-6, 6, 1201)
    mu1, mu2 = np.exp(-x**2), x * np.exp(-x**2)
    d1, d2 = -2 * x * mu1, (1 - 2 * x**2) * np.exp(-x**2)
    assert wronskian_sign_changes(mu1, mu2, dmu1=d1, dmu2=d2) == 0
    np.testing.assert_allclose(mu1 * d2 - mu2 * d1, np.exp(-2 * x**2), atol=1e-15)


def test_parallel_pair_rejected():
    x = np.linspace(-3, 3, 101)
    mu = np.exp(-x**2)
    with pytest.raises(DegenerateInput):
        wronskian_sign_changes(mu, 2 * mu, h=0.06)


def test_count_sign_changes_ignores_noise():
    v = np.array([1.0, 1e-20, -1e-20, 2.0, -1.0, -3.0, 1e-19, 4.0])
    assert count_sign_changes(v, 1e-12) == 2


@pytest.mark.parametrize("t", [-20.0, 0.0, 20.0])
def test_two_soliton_wronskian_count(params, t):
    n = 4096
    x0, h = kernel_grid(params, t, n)
    mu1, mu2, d1, d2 = kernel_directions(params, t, x0, h, n, with_x=True)
    assert wronskian_sign_changes(mu1, mu2, dmu1=d1, dmu2=d2) == 1
    assert wronskian_sign_changes(mu1, mu2, h=h) == 1


@pytest.mark.parametrize("t", [-20.0, 0.0, 20.0])
def test_reciprocal_wronskian_count(params, t):
    pair = _pair(params)
    centre, half = spectrum_box(params, t)
    y = pair.invert_x(np.linspace(centre - half, centre + half, 4001), t)
    wr = reciprocal_wronskian(params, t, y)
    assert count_sign_changes(wr, 1e3 * np.finfo(float).eps * np.max(np.abs(wr))) == 1

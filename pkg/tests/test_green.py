import dataclasses
import math

import numpy as np
import pytest
from oracles import dense_green_columns

from spinorlab.clifford import build_clifford
from spinorlab.constants import omega_n
from spinorlab.dirac import DiracOperator, ZeroModeError
from spinorlab.fields import GridSpec
from spinorlab.green import (
    ChartModel,
    MassSpinorParams,
    chart_quotient,
    choose_eigenpair,
    default_eps_sweep,
    dirac_harmonicity_defect,
    existence_criterion,
    fit_exponents,
    fit_mass_coefficient,
    green_function,
    mass_endomorphism,
    mass_params,
    mass_test_spinor,
    predicted_mass_coefficient,
    richardson,
    singular_kernel,
    smoothed_singular_kernel,
    sphere_rule,
    zone_checks,
)
from spinorlab.killing import moments


def op(n, N, L=2 * math.pi, spin="a"):
    return DiracOperator(GridSpec.cube(n, N, L, spin), build_clifford(n))


@pytest.mark.parametrize("n,N", [(1, 32), (2, 16), (3, 8)])
def test_matches_dense_inverse(n, N):
    D = op(n, N, 4.0)
    p = (0.5,) * n
    exp = green_function(D, p)
    g = D.grid
    ref = dense_green_columns(g.sizes, g.lengths, g.spin, D.rep.gammas, g.index_of(p))
    assert np.abs(exp.G - ref).max() <= 1e-10


def test_is_fundamental_solution():
    D = op(2, 16)
    exp = green_function(D, (0.0, 0.0))
    for a in range(2):
        DG = D.apply(exp.column(a)).values
        delta = np.zeros_like(DG)
        delta[D.grid.index_of((0.0, 0.0)) + (a,)] = 1 / D.grid.cell_volume
        np.testing.assert_allclose(DG, delta, atol=1e-9)


def test_reciprocity():
    D = op(2, 16)
    p, q = (0.0, 0.0), (2 * math.pi / 16 * 3, -2 * math.pi / 16 * 5)
    Gp, Gq = green_function(D, p), green_function(D, q)
    ip, iq = D.grid.index_of(p), D.grid.index_of(q)
    for a in range(2):
        for b in range(2):
            assert Gp.G[a][iq + (b,)] == pytest.approx(np.conj(Gq.G[b][ip + (a,)]), abs=1e-12)


def test_columns_are_odd_about_the_pole():
    D = op(3, 8)
    exp = green_function(D, (0.0, 0.0, 0.0))
    G = exp.G
    # x -> -x about the centre node 4: index i -> 8 - i, with a sign from each wrapped axis
    flipped = np.roll(G[:, ::-1, ::-1, ::-1], 1, axis=(1, 2, 3))
    flipped[:, 0] *= -1
    flipped[:, :, 0] *= -1
    flipped[:, :, :, 0] *= -1
    np.testing.assert_allclose(G, -flipped, atol=1e-12)


@pytest.mark.parametrize("n", [2, 3])
def test_cubic_torus_has_zero_mass(n):
    exp = green_function(op(n, 16), (0.0,) * n)
    assert np.abs(exp.alpha).max() <= 1e-8
    assert np.abs(exp.alpha_parity).max() <= 1e-8
    assert exp.self_adjoint_defect <= 1e-8
    np.testing.assert_allclose(mass_endomorphism(exp), exp.alpha)


def test_mass_is_stable_under_refinement():
    a16 = green_function(op(2, 16), (0.0, 0.0)).alpha
    a32 = green_function(op(2, 32), (0.0, 0.0)).alpha
    assert np.abs(a16 - a32).max() <= 1e-8


def test_mass_endomorphism_rejects_non_hermitian():
    exp = green_function(op(2, 8), (0.0, 0.0))
    bad = dataclasses.replace(exp, alpha=np.array([[0, 1], [0, 0]], dtype=complex))
    with pytest.raises(ValueError):
        mass_endomorphism(bad)


def test_periodic_torus_has_no_green_function():
    with pytest.raises(ZeroModeError):
        green_function(op(2, 7, spin="p"), (0.0, 0.0))


def test_harmonicity_converges_at_second_order():
    d = [dirac_harmonicity_defect(green_function(op(2, N), (0.0, 0.0)), 0.5, 1.2) for N in (16, 32, 64)]
    assert d[0] / d[1] > 3.5 and d[1] / d[2] > 3.5


def test_smoothed_kernel_limits():
    rep = build_clifford(3)
    rng = np.random.default_rng(0)
    x = rng.standard_normal((50, 3)) * 2
    s = np.array([1.0, 1j])
    far = smoothed_singular_kernel(rep, x, s, 1e-4)
    np.testing.assert_allclose(far, singular_kernel(rep, x, s), rtol=1e-10)
    assert np.all(np.isfinite(smoothed_singular_kernel(rep, np.zeros((1, 3)), s, 0.1)))


def test_singular_kernel_is_fundamental_direction():
    # -x/(omega |x|^n) has unit outward flux through every sphere
    rep = build_clifford(3)
    u, w = sphere_rule(3, 8)
    s = np.array([1.0, 0.0])
    for R in (0.5, 2.0):
        k = singular_kernel(rep, R * u, s)
        # divergence theorem: integral of nu . K over the sphere of radius R
        flux = R**2 * np.einsum("p,pj,jab,pb->a", w, u, rep.stacked(), k)
        np.testing.assert_allclose(flux, s, atol=1e-12)


def test_richardson_removes_linear_term():
    vals = [np.array(2.0 + 3.0 * s + 0.5 * s**2) for s in (0.1, 0.05, 0.025)]
    assert float(richardson(vals)) == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_sphere_rule(n):
    u, w = sphere_rule(n, 8)
    assert w.sum() == pytest.approx(omega_n(n - 1), rel=1e-12)
    np.testing.assert_allclose(np.linalg.norm(u, axis=-1), 1.0, atol=1e-13)
    if n > 1:
        assert np.sum(w * u[:, 0] ** 2) == pytest.approx(omega_n(n - 1) / n, rel=1e-12)


def test_chart_model_projection_is_harmonic():
    rep = build_clifford(3)
    rng = np.random.default_rng(1)
    B = rng.standard_normal((3, 2, 2)) + 1j * rng.standard_normal((3, 2, 2))
    model = ChartModel(rep, np.eye(2), B)
    assert np.abs(np.einsum("jab,jbc->ac", rep.stacked(), model.B)).max() <= 1e-13
    x = rng.standard_normal((4, 3))
    s = np.array([1.0, 2.0])
    np.testing.assert_allclose(model.theta(2 * x, s), 2 * model.theta(x, s))
    with pytest.raises(ValueError):
        ChartModel(rep, np.eye(3))


def test_eigenpair_normalization():
    lam, psi = choose_eigenpair(np.diag([0.3, -1.0, 2.0, 0.0]).astype(complex))
    assert lam == pytest.approx(2.0)
    assert np.vdot(psi, psi).real == pytest.approx(0.5)
    assert abs(psi[2]) == pytest.approx(math.sqrt(0.5))


def test_mass_params():
    prm = mass_params(np.eye(2), 3, 0.01)
    assert prm.xi == pytest.approx(0.01**0.25)
    assert prm.eps < prm.xi < 2 * prm.xi
    with pytest.raises(ValueError):
        MassSpinorParams(3, 1.0, 0.0, np.zeros(2))


def test_predicted_coefficient():
    for n in (2, 3, 4):
        c = predicted_mass_coefficient(n, 1.5)
        assert c == pytest.approx(-(2 ** (n / 2 - 1)) * 1.5 * moments(n).J / omega_n(n))
    # in two dimensions J = omega_2, so the coefficient is minus the eigenvalue
    assert predicted_mass_coefficient(2, 0.7) == pytest.approx(-0.7)


def test_fit_recovers_synthetic_coefficient():
    n = 3
    eps = default_eps_sweep(n)
    powers = fit_exponents(n)
    ratios = 1 - 2.5 * eps ** powers[0] + 4.0 * eps ** powers[1] + 1.0 * eps ** powers[2]
    lead, terms = fit_mass_coefficient(n, eps, ratios)
    assert lead == pytest.approx(-2.5, rel=1e-6)
    assert fit_mass_coefficient(n, eps[:2], ratios[:2]) == (0.0, [])


def test_eps_sweep_is_decreasing():
    for n in (2, 3, 5):
        e = default_eps_sweep(n)
        assert np.all(np.diff(e) < 0) and e[0] < 1 and e[-1] >= 1e-6


def test_zone_identities_on_grid():
    D = op(2, 256)
    exp = green_function(D, (0.0, 0.0))
    z = zone_checks(D, exp, mass_params(exp.alpha, 2, 0.4))
    assert z.outer_max <= 1e-8
    assert z.inner_rel <= 1e-5
    assert z.interface_jump <= 1e-12


def test_mass_spinor_needs_room():
    exp = green_function(op(2, 16, 2.0), (0.0, 0.0))
    with pytest.raises(ValueError):
        mass_test_spinor(exp, mass_params(exp.alpha, 2, 0.4))


def test_zero_mass_quotient_is_above_bound():
    model = ChartModel.constant(build_clifford(3), np.zeros((2, 2)))
    cq = chart_quotient(model, mass_params(model.alpha, 3, 0.01))
    assert cq.ratio >= 1 - 1e-9


def test_positive_mass_lowers_quotient():
    rep = build_clifford(2)
    res = existence_criterion(ChartModel.constant(rep, np.diag([1.0, -0.5])))
    assert res.criterion_met
    assert res.eigenvalue == pytest.approx(1.0)
    assert res.fitted_mass_coeff < 0
    assert res.fitted_mass_coeff == pytest.approx(res.predicted_coeff, rel=1e-3)
    assert all(r < 1 for r in res.ratios)


def test_negative_mass_does_not_meet_criterion():
    rep = build_clifford(2)
    res = existence_criterion(ChartModel.constant(rep, -np.eye(2)))
    assert not res.criterion_met
    assert "not positive" in res.explanation

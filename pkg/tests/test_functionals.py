import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinorlab.clifford import build_clifford
from spinorlab.constants import critical_exponents, spinorial_k
from spinorlab.dirac import DiracOperator, ZeroModeError
from spinorlab.fields import GridSpec, ScalarField, SpinorField, lp_norm
from spinorlab.functionals import (
    ExponentPair,
    NullPairingError,
    SobolevBudget,
    conformal_quotient,
    fit_b_eps,
    functional_F,
    mode_weights,
    q_norm_profile,
    sobolev_budget,
    spectral_half_norm,
)


def op(n, N=8, L=2 * math.pi, spin="a"):
    return DiracOperator(GridSpec.cube(n, N, L, spin), build_clifford(n))


def unit(f):
    return f * (1 / lp_norm(f, 2))


def test_exponent_pair():
    pair = ExponentPair.critical_pair(3)
    assert (pair.q, pair.p, pair.critical) == (1.5, 3.0, True)
    sub = ExponentPair.from_q(1.7, 3)
    assert not sub.critical and sub.p == pytest.approx(1.7 / 0.7)
    assert ExponentPair.from_q(1.5, 3).critical


@pytest.mark.parametrize("n,q", [(1, 1.7), (2, 1.8), (3, 1.6)])
def test_eigenspinor_value(n, q):
    D = op(n, L=5.0)
    e = D.lowest_eigenspinor()
    lam = D.smallest_positive_eigenvalue()
    V = D.grid.volume
    assert functional_F(D, e, None, q) == pytest.approx(lam * V ** (2 / q - 1), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), c=st.complex_numbers(min_magnitude=1e-2, max_magnitude=1e2))
def test_quotient_scale_invariant(seed, c):
    D = op(2)
    f = D.random_band_limited(np.random.default_rng(seed), band=1.5) + D.lowest_eigenspinor() * 30
    assert functional_F(D, f * c, None, 1.8) == pytest.approx(functional_F(D, f, None, 1.8), rel=1e-10)


@pytest.mark.parametrize("c", [0.25, 2.0, 7.0])
def test_weight_scaling(c):
    D = op(3)
    f = D.lowest_eigenspinor() + D.random_band_limited(np.random.default_rng(2), band=1.5) * 0.01
    q = 1.7
    p = q / (q - 1)
    H = ScalarField(D.grid, 1 + 0.3 * np.cos(D.grid.coords()[..., 0]))
    Hc = ScalarField(D.grid, c * H.values)
    assert functional_F(D, f, Hc, q) == pytest.approx(c ** (-2 / p) * functional_F(D, f, H, q), rel=1e-12)


def test_null_pairing_raises():
    D = op(2)
    plus = D.plane_wave((0, 0), sign=1)
    minus = D.plane_wave((0, 0), sign=-1)
    with pytest.raises(NullPairingError):
        functional_F(D, plus + minus, None, 1.8)


def test_nonpositive_weight_raises():
    D = op(2)
    with pytest.raises(ValueError):
        functional_F(D, D.lowest_eigenspinor(), ScalarField.constant(D.grid, 0.0), 1.8)


def test_precomputed_dirac_is_used():
    D = op(2)
    f = D.lowest_eigenspinor()
    assert functional_F(D, f, None, 1.8, Dpsi=D.apply(f)) == functional_F(D, f, None, 1.8)


def test_conformal_quotient_of_zero():
    D = op(3)
    with pytest.raises(ValueError):
        conformal_quotient(D, SpinorField.zeros(D.grid, D.rep))


def test_conformal_quotient_of_eigenspinor():
    D = op(3, L=4.0)
    e = D.lowest_eigenspinor()
    q, p = critical_exponents(3)
    V = D.grid.volume
    ref = D.smallest_positive_eigenvalue() * V ** (1 / q - 1 / p)
    assert conformal_quotient(D, e) == pytest.approx(ref, rel=1e-12)


def test_mode_weights_parseval():
    D = op(2)
    f = D.random_band_limited(np.random.default_rng(3), band=2.5)
    _, amp2 = mode_weights(D, f)
    assert amp2.sum() == pytest.approx(lp_norm(f, 2) ** 2, rel=1e-12)


def test_half_norm_examples():
    D = op(2)
    e1 = unit(D.plane_wave((0, 0)))   # |k| = sqrt(2)/2
    e2 = unit(D.plane_wave((1, 0)))   # |k| = sqrt(10)/2
    l1, l2 = math.sqrt(2) / 2, math.sqrt(10) / 2
    assert spectral_half_norm(D, e1) == pytest.approx(math.sqrt(l1), rel=1e-12)
    assert spectral_half_norm(D, e1, "squared") == pytest.approx(math.sqrt(l1), rel=1e-12)
    f = e1 * 3 + e2 * 4j
    assert spectral_half_norm(D, f) == pytest.approx(9 * math.sqrt(l1) + 16 * math.sqrt(l2), rel=1e-12)
    assert spectral_half_norm(D, f, "squared") == pytest.approx(math.sqrt(9 * l1 + 16 * l2), rel=1e-12)


def test_half_norm_homogeneity():
    D = op(3)
    f = D.random_band_limited(np.random.default_rng(4), band=1.5)
    assert spectral_half_norm(D, f * 3, "squared") == pytest.approx(3 * spectral_half_norm(D, f, "squared"))
    assert spectral_half_norm(D, f * 3) == pytest.approx(9 * spectral_half_norm(D, f))


def test_half_norm_errors():
    with pytest.raises(ValueError):
        spectral_half_norm(op(2), op(2).lowest_eigenspinor(), "other")
    Dp = op(2, spin="p")
    with pytest.raises(ZeroModeError):
        spectral_half_norm(Dp, SpinorField.zeros(Dp.grid, Dp.rep))


def test_budget_fields_and_required_b():
    D = op(3, N=16)
    f = D.random_band_limited(np.random.default_rng(5), band=2.5, decay=0.3)
    b = sobolev_budget(D, f, 0.05)
    assert b.K == spinorial_k(3)
    B = b.required_B()
    tight = sobolev_budget(D, f, 0.05, max(B, 0.0))
    if B >= 0:
        assert tight.slack == pytest.approx(0.0, abs=1e-12 * b.lhs)
    else:
        assert tight.slack >= 0


def test_budget_validation():
    D = op(3)
    f = D.lowest_eigenspinor()
    with pytest.raises(ValueError):
        sobolev_budget(D, f, 0.0)
    with pytest.raises(ValueError):
        sobolev_budget(D, f, 0.1, -1.0)


def test_required_b_without_mass():
    ok = SobolevBudget(lhs=1.0, dirac_term=2.0, mass_term=0.0, K=1.0, eps=0.0, B_eps=0.0)
    bad = SobolevBudget(lhs=3.0, dirac_term=2.0, mass_term=0.0, K=1.0, eps=0.0, B_eps=0.0)
    assert ok.required_B() == -math.inf
    assert bad.required_B() == math.inf


def test_fit_b_eps_is_unfloored_max():
    mk = lambda lhs: SobolevBudget(lhs=lhs, dirac_term=1.0, mass_term=1.0, K=1.0, eps=0.0, B_eps=0.0)
    assert fit_b_eps([mk(0.2), mk(0.5)]) == pytest.approx(-0.5)
    assert fit_b_eps([mk(0.2), mk(1.5)]) == pytest.approx(0.5)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), t=st.floats(0.05, 0.95))
def test_q_norms_are_log_convex(seed, t):
    D = op(2)
    f = D.random_band_limited(np.random.default_rng(seed), band=2.5)
    q0, q1 = 1.2, 3.0
    qt = 1 / ((1 - t) / q0 + t / q1)
    n0, nt, n1 = q_norm_profile(f, [q0, qt, q1])
    assert nt <= n0 ** (1 - t) * n1**t * (1 + 1e-12)

"""Explicit Killing-type test spinors, cutoffs, moments and upper-bound estimates.

The Euclidean test spinor is ``psi(x) = f(x)^(n/2) (psi0 - x . psi0)`` with
``f = 2/(1+|x|^2)``. With ``|psi0| = 1`` one has ``|psi|^2 = 2 f^(n-1)`` and
``D psi = (n/2) f psi``; ``killing_spinor`` divides by ``sqrt(2)`` by default
so that ``|psi|^2 = f^(n-1)`` and ``|D psi|^2 = (n^2/4) f^(n+1)`` hold as
stated identities. The quotient ``F`` is scale invariant, so the choice does
not move any estimate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, special

from .clifford import CliffordRep, clifford_mul
from .constants import critical_exponents, omega_n, upper_bound
from .dirac import DiracOperator
from .fields import GridSpec, ScalarField, SpinorField, boundary_shell_mass
from .functionals import functional_F


def smoothstep(t):
    """C-infinity step: 0 for ``t <= 0``, 1 for ``t >= 1``, slope at most 2."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def smoothstep_derivative(t):
    t = np.asarray(t, dtype=float)
    inside = (t > 0) & (t < 1)
    tt = np.where(inside, t, 0.5)
    a = np.exp(-1.0 / tt)
    b = np.exp(-1.0 / (1.0 - tt))
    d = (a * b * (1 / tt**2 + 1 / (1 - tt) ** 2)) / (a + b) ** 2
    return np.where(inside, d, 0.0)


def cutoff(r, delta: float):
    """``eta(r)``: 1 on ``[0, delta]``, 0 beyond ``2 delta``, ``|eta'| <= 2/delta``."""
    return 1.0 - smoothstep((np.asarray(r) - delta) / delta)


def cutoff_derivative(r, delta: float):
    return -smoothstep_derivative((np.asarray(r) - delta) / delta) / delta


def conformal_f(r):
    """``f(r) = 2 / (1 + r^2)``."""
    return 2.0 / (1.0 + np.asarray(r) ** 2)


@dataclass(frozen=True)
class KillingProfile:
    n: int
    eps: float
    delta: float | None
    center: tuple[float, ...] = ()
    psi0: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("scale eps must be positive")
        if self.delta is not None and self.delta <= 0:
            raise ValueError("cutoff radius delta must be positive")
        center = tuple(float(c) for c in self.center) or (0.0,) * self.n
        if len(center) != self.n:
            raise ValueError("center has the wrong dimension")
        object.__setattr__(self, "center", center)
        if self.psi0 is not None:
            psi0 = np.asarray(self.psi0, dtype=complex)
            if abs(np.linalg.norm(psi0) - 1) > 1e-12:
                raise ValueError("psi0 must be a unit fiber vector")
            object.__setattr__(self, "psi0", psi0)

    def fiber_vector(self, rep: CliffordRep) -> np.ndarray:
        if self.psi0 is None:
            e = np.zeros(rep.fiber_dim, dtype=complex)
            e[0] = 1.0
            return e
        if self.psi0.shape != (rep.fiber_dim,):
            raise ValueError("psi0 has the wrong fiber dimension")
        return self.psi0


def euclidean_killing_values(rep: CliffordRep, x: np.ndarray, psi0: np.ndarray,
                             eps: float = 1.0, normalized: bool = True) -> np.ndarray:
    """``f(x/eps)^(n/2) (psi0 - (x/eps) . psi0)`` at points ``x`` (trailing axis ``n``)."""
    y = np.asarray(x, dtype=float) / eps
    r2 = np.sum(y**2, axis=-1)
    amp = (2.0 / (1.0 + r2)) ** (rep.n / 2)
    vals = amp[..., None] * (psi0 - clifford_mul(rep, y, np.broadcast_to(psi0, y.shape[:-1] + psi0.shape)))
    return vals / math.sqrt(2.0) if normalized else vals


def killing_spinor(rep: CliffordRep, grid: GridSpec, prof: KillingProfile,
                   normalized: bool = True) -> SpinorField:
    """``eta(|x-c|) psi((x-c)/eps)`` sampled on the grid; no cutoff when ``delta is None``."""
    if prof.n != grid.n or rep.n != grid.n:
        raise ValueError("profile, representation and grid dimensions differ")
    if prof.delta is not None and 2 * prof.delta > min(grid.lengths) / 2 + 1e-12:
        raise ValueError(
            f"cutoff support 2*delta = {2 * prof.delta} exceeds half the box {min(grid.lengths) / 2}"
        )
    x = grid.displacement(prof.center)
    vals = euclidean_killing_values(rep, x, prof.fiber_vector(rep), prof.eps, normalized)
    if prof.delta is not None:
        vals = vals * cutoff(np.linalg.norm(x, axis=-1), prof.delta)[..., None]
    return SpinorField(grid, rep, vals)


@dataclass(frozen=True)
class KillingDefects:
    modulus: float   # max | |psi|^2 - f^(n-1) | on B(delta)
    dirac: float     # relative L^2 error of D psi = (n f / 2 eps) psi on B(delta)


def killing_defects(D: DiracOperator, prof: KillingProfile) -> KillingDefects:
    """Pointwise modulus and spectral eigen-identity of the cut-off Killing spinor where ``eta = 1``."""
    if prof.delta is None:
        raise ValueError("the identities are checked on B(delta); give a cutoff radius")
    grid, n = D.grid, D.grid.n
    psi = killing_spinor(D.rep, grid, prof)
    r = np.linalg.norm(grid.displacement(prof.center), axis=-1)
    f = conformal_f(r / prof.eps)
    ball = r <= prof.delta
    mod = float(np.max(np.abs(psi.modulus()[ball] ** 2 - f[ball] ** (n - 1))))
    Dpsi = D.apply(psi).values[ball]
    model = (n * f[ball] / (2 * prof.eps))[:, None] * psi.values[ball]
    rel = float(np.linalg.norm(Dpsi - model) / np.linalg.norm(model))
    return KillingDefects(modulus=mod, dirac=rel)


@dataclass(frozen=True)
class Moments:
    n: int
    I: float
    J: float


def moments(n: int) -> Moments:
    """``I = int_0^inf r^(n-1) f^n dr`` and ``J = int_{R^n} f^(n/2+1) dx`` by adaptive quadrature."""
    if n < 2:
        raise ValueError("moments need n >= 2")
    opts = dict(epsabs=0.0, epsrel=1e-13, limit=200)
    i_val, _ = integrate.quad(lambda r: r ** (n - 1) * conformal_f(r) ** n, 0, np.inf, **opts)
    j_rad, _ = integrate.quad(lambda r: r ** (n - 1) * conformal_f(r) ** (n / 2 + 1), 0, np.inf, **opts)
    return Moments(n=n, I=i_val, J=omega_n(n - 1) * j_rad)


def radial_beta_moment(a: float, b: float, scale: float) -> float:
    """``int_0^inf r^a (scale/(1+r^2))^b dr`` in closed form (Euler beta function)."""
    return scale**b * special.beta((a + 1) / 2, b - (a + 1) / 2) / 2


def bump_H(grid: GridSpec, p, n: int, depth: float, r0: float | None = None) -> ScalarField:
    """Positive weight with maximum 1 at ``p`` and vanishing derivatives through order ``n-1``.

    ``H = 1 - depth * w(|x-p|/r0)`` with ``w(t) = (1-S) t^(2m)/(1+t^(2m)) + S``,
    ``m = ceil(n/2)`` and ``S`` the smooth step from ``t = 2`` to ``t = 3``, so
    the Taylor defect at ``p`` starts at order ``2m >= n`` and ``H = 1 - depth``
    beyond ``3 r0``. ``r0`` defaults to a sixth of the shortest period.
    """
    if not 0 < depth < 1:
        raise ValueError("depth must lie in (0, 1)")
    if n != grid.n:
        raise ValueError("dimension mismatch")
    if r0 is None:
        r0 = min(grid.lengths) / 6
    m = math.ceil(n / 2)
    t = np.linalg.norm(grid.displacement(p), axis=-1) / r0
    return ScalarField(grid, 1.0 - depth * bump_profile(t, m))


def bump_profile(t, m: int):
    t = np.asarray(t, dtype=float)
    s = smoothstep(t - 2.0)
    core = t ** (2 * m) / (1.0 + t ** (2 * m))
    return (1.0 - s) * core + s


@dataclass(frozen=True)
class UpperBoundEstimate:
    value: float
    bound: float
    seam_error: float

    @property
    def ratio(self) -> float:
        return self.value / self.bound


def upper_bound_estimate(D: DiracOperator, H: ScalarField | None, prof: KillingProfile,
                         tol: float = 1e-12) -> UpperBoundEstimate:
    """Quotient ``F_{q_D}`` of the cut-off test spinor against ``K(n)^(-1) (max H)^(-2/p_D)``."""
    n = D.grid.n
    q_d, _ = critical_exponents(n)
    max_h = 1.0
    if H is not None:
        H.require_positive()
        max_h = float(H.values.max())
        h_center = H.values[D.grid.index_of(prof.center)]
        if h_center < max_h - tol:
            raise ValueError(f"profile center is not a maximum of H ({h_center} < {max_h})")
    psi = killing_spinor(D.rep, D.grid, prof)
    value = functional_F(D, psi, H, q_d)
    return UpperBoundEstimate(value=value, bound=upper_bound(n, max_h),
                              seam_error=boundary_shell_mass(psi))


def radial_quotient(n: int, eps: float, delta: float | None, q: float | None = None,
                    H: Callable[[np.ndarray], np.ndarray] | None = None) -> float:
    """``F_q`` of ``eta psi(x/eps)`` on flat ``R^n`` for a radial weight ``H(r)``.

    Both ``|D(eta psi)|^2 = eta'^2 |psi|^2 + eta^2 (n f/2 eps)^2 |psi|^2`` and
    ``<D(eta psi), eta psi> = eta^2 (n f/2 eps) |psi|^2`` are radial (the cross
    term is a Clifford product, hence skew), so ``F`` reduces to two 1-D
    integrals.
    """
    if q is None:
        q = critical_exponents(n)[0]
    p = q / (q - 1)

    def pieces(r):
        f = conformal_f(r / eps)
        mod2 = f ** (n - 1)
        if delta is None:
            eta, deta = 1.0, 0.0
        else:
            eta, deta = cutoff(r, delta), cutoff_derivative(r, delta)
        dpsi2 = deta**2 * mod2 + eta**2 * (n * f / (2 * eps)) ** 2 * mod2
        pair = eta**2 * (n * f / (2 * eps)) * mod2
        return dpsi2, pair

    def num(r):
        dpsi2, _ = pieces(r)
        w = 1.0 if H is None else H(r) ** (-q / p)
        return w * dpsi2 ** (q / 2) * r ** (n - 1)

    def den(r):
        return pieces(r)[1] * r ** (n - 1)

    opts = dict(epsabs=0.0, epsrel=1e-12, limit=400)
    if delta is None:
        upper, pts = np.inf, None
        a, _ = integrate.quad(num, 0, eps, **opts)
        b, _ = integrate.quad(num, eps, np.inf, **opts)
        c, _ = integrate.quad(den, 0, eps, **opts)
        d, _ = integrate.quad(den, eps, np.inf, **opts)
        num_val, den_val = a + b, c + d
    else:
        upper = 2 * delta
        pts = sorted({min(eps, delta), delta})
        num_val, _ = integrate.quad(num, 0, upper, points=pts, **opts)
        den_val, _ = integrate.quad(den, 0, upper, points=pts, **opts)
    area = omega_n(n - 1)
    return (area * num_val) ** (2 / q) / (area * den_val)

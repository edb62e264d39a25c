"""Scalar functionals built from norms and pairings of spinor fields."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .constants import conjugate, critical_exponents, spinorial_k
from .dirac import DiracOperator, ZeroModeError, conformal_dirac_apply
from .fields import ScalarField, SpinorField, lp_norm, pairing

NULL_PAIRING_TOL = 1e-13


class NullPairingError(ValueError):
    """``int <D psi, psi>`` vanishes, so the quotient is undefined."""


@dataclass(frozen=True)
class ExponentPair:
    q: float
    p: float
    critical: bool

    @classmethod
    def from_q(cls, q: float, n: int) -> "ExponentPair":
        q_d, _ = critical_exponents(n)
        return cls(q=q, p=conjugate(q), critical=abs(q - q_d) < 1e-14)

    @classmethod
    def critical_pair(cls, n: int) -> "ExponentPair":
        q_d, p_d = critical_exponents(n)
        return cls(q=q_d, p=p_d, critical=True)


def functional_F(D: DiracOperator, psi: SpinorField, H: ScalarField | None, q: float,
                 Dpsi: SpinorField | None = None) -> float:
    """``||H^(-1/p) D psi||_q^2 / |int <D psi, psi>|`` with ``1/p + 1/q = 1``.

    ``H = None`` means ``H = 1``. A precomputed ``D psi`` may be passed in.
    """
    p = conjugate(q)
    if Dpsi is None:
        Dpsi = D.apply(psi)
    weight = None
    if H is not None:
        H.require_positive()
        weight = ScalarField(H.grid, H.values ** (-q / p))
    den = pairing(Dpsi, psi).real
    scale = lp_norm(psi, 2) * lp_norm(Dpsi, 2)
    if scale == 0 or abs(den) <= NULL_PAIRING_TOL * scale:
        raise NullPairingError("int <D psi, psi> vanishes; the quotient is undefined")
    return lp_norm(Dpsi, q, weight) ** 2 / abs(den)


def conformal_quotient(D: DiracOperator, phi: SpinorField, u: ScalarField | None = None) -> float:
    """``||D phi||_{q_D} / ||phi||_{p_D}`` in the metric ``exp(2u) g`` (``u = None``: flat).

    In the conformal metric the Dirac operator is ``conformal_dirac_apply`` and
    the volume element carries the weight ``exp(n u)``.
    """
    n = D.grid.n
    q_d, p_d = critical_exponents(n)
    if lp_norm(phi, 2) == 0:
        raise ValueError("quotient of the zero field is undefined")
    if u is None:
        return lp_norm(D.apply(phi), q_d) / lp_norm(phi, p_d)
    vol = ScalarField(u.grid, np.exp(n * u.values))
    Dphi = conformal_dirac_apply(D, phi, u)
    return lp_norm(Dphi, q_d, vol) / lp_norm(phi, p_d, vol)


@dataclass(frozen=True)
class SobolevBudget:
    lhs: float
    dirac_term: float
    mass_term: float
    K: float
    eps: float
    B_eps: float

    @property
    def slack(self) -> float:
        return (self.K + self.eps) * self.dirac_term + self.B_eps * self.mass_term - self.lhs

    def required_B(self) -> float:
        """Smallest ``B`` making this sample satisfy the inequality (may be negative)."""
        if self.mass_term == 0:
            return float("-inf") if self.lhs <= (self.K + self.eps) * self.dirac_term else float("inf")
        return (self.lhs - (self.K + self.eps) * self.dirac_term) / self.mass_term


def sobolev_budget(D: DiracOperator, phi: SpinorField, eps: float, B_eps: float = 0.0) -> SobolevBudget:
    if eps <= 0:
        raise ValueError("eps must be positive")
    if B_eps < 0:
        raise ValueError("B_eps must be non-negative")
    n = D.grid.n
    q_d, _ = critical_exponents(n)
    Dphi = D.apply(phi)
    return SobolevBudget(
        lhs=abs(pairing(Dphi, phi).real),
        dirac_term=lp_norm(Dphi, q_d) ** 2,
        mass_term=lp_norm(phi, q_d) ** 2,
        K=spinorial_k(n),
        eps=eps,
        B_eps=B_eps,
    )


def fit_b_eps(budgets: Iterable[SobolevBudget]) -> float:
    """Empirical ``B_eps``: the largest requirement over a family.

    It is negative when every sample already satisfies the inequality with
    ``B = 0``; the admissible constant is then ``max(0, fit)``.
    """
    return max(b.required_B() for b in budgets)


def mode_weights(D: DiracOperator, psi: SpinorField) -> tuple[np.ndarray, np.ndarray]:
    """``(|lambda|, |A|^2)`` per Fourier mode, amplitudes for L^2-normalized eigenspinors.

    Both eigenspaces of ``sigma(k)`` share ``|lambda| = |k|``, so their weights
    are summed.
    """
    modes = D.to_modes(psi.values)
    g = D.grid
    amp2 = np.sum(np.abs(modes) ** 2, axis=-1) * g.volume / g.npoints**2
    return np.sqrt(D.ksq), amp2


def spectral_half_norm(D: DiracOperator, psi: SpinorField, convention: str = "printed") -> float:
    """Spectral ``H^2_{1/2}`` norm.

    ``printed``: ``sum_i |lambda_i|^(1/2) |A_i|^2``;
    ``squared``: ``(sum_i |lambda_i| |A_i|^2)^(1/2)``, homogeneous of degree one.
    """
    if not D.invertible:
        raise ZeroModeError("the half-norm needs an invertible Dirac operator")
    lam, amp2 = mode_weights(D, psi)
    if convention == "printed":
        return float(np.sum(np.sqrt(lam) * amp2))
    if convention == "squared":
        return float(np.sqrt(np.sum(lam * amp2)))
    raise ValueError(f"unknown half-norm convention {convention!r}")


def q_norm_profile(Dpsi: SpinorField, qs) -> np.ndarray:
    """``q -> ||D psi||_q`` on a grid of exponents."""
    return np.array([lp_norm(Dpsi, q) for q in qs])

"""Closed-form constants: sphere volumes, sharp Sobolev constants, sphere invariants."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass


def omega_n(n: int) -> float:
    """Volume of the round unit sphere ``S^n``: ``2 pi^((n+1)/2) / Gamma((n+1)/2)``.

    ``S^0`` is two points, so ``omega_n(0) = 2``.
    """
    if n < 0:
        raise ValueError(f"sphere dimension must be >= 0, got {n}")
    return 2 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


def critical_exponents(n: int) -> tuple[float, float]:
    """``(q_D, p_D) = (2n/(n+1), 2n/(n-1))``."""
    if n < 2:
        raise ValueError("critical exponents need n >= 2")
    return 2 * n / (n + 1), 2 * n / (n - 1)


def conjugate(q: float) -> float:
    if q <= 1:
        raise ValueError(f"Hoelder conjugate needs q > 1, got {q}")
    return q / (q - 1)


def sobolev_k2(n: int) -> float:
    """Best Euclidean constant ``K(n,2) = (4 / (n(n-2) omega_n^(2/n)))^(1/2)``."""
    if n < 3:
        raise ValueError("K(n,2) needs n >= 3")
    return math.sqrt(4 / (n * (n - 2) * omega_n(n) ** (2 / n)))


def spinorial_k(n: int) -> float:
    """Sharp spinorial constant ``K(n) = (2/n) omega_n^(-1/n)``."""
    if n < 2:
        raise ValueError("K(n) needs n >= 2")
    return (2 / n) * omega_n(n) ** (-1 / n)


def lambda_sphere(n: int) -> float:
    """``lambda_min`` of the round sphere, ``(n/2) omega_n^(1/n)``."""
    return (n / 2) * omega_n(n) ** (1 / n)


def lambda_hemisphere(n: int) -> float:
    """Chiral bag invariant of the round hemisphere, ``(n/2)(omega_n/2)^(1/n)``."""
    return (n / 2) * (omega_n(n) / 2) ** (1 / n)


def yamabe_sphere(n: int) -> float:
    """``Y(S^n) = 4 (n-1)/(n-2) K(n,2)^(-2)``."""
    return 4 * (n - 1) / (n - 2) / sobolev_k2(n) ** 2


def hijazi_sphere_gap(n: int) -> float:
    """``lambda_min(S^n)^2 - n/(4(n-1)) Y(S^n)``; zero because the round sphere is extremal."""
    return lambda_sphere(n) ** 2 - n / (4 * (n - 1)) * yamabe_sphere(n)


@dataclass(frozen=True)
class SharpConstants:
    n: int
    omega_n: float
    K2: float
    Kn: float
    lam_sphere: float
    lam_hemisphere: float
    hijazi_gap: float

    def as_row(self) -> dict:
        return asdict(self)


def sharp_constants(n: int) -> SharpConstants:
    """All constants for dimension ``n``; ``K2`` and ``hijazi_gap`` are NaN for ``n = 2``."""
    if n < 2:
        raise ValueError(f"sharp constants need n >= 2, got {n}")
    k2 = sobolev_k2(n) if n >= 3 else float("nan")
    gap = hijazi_sphere_gap(n) if n >= 3 else float("nan")
    return SharpConstants(
        n=n,
        omega_n=omega_n(n),
        K2=k2,
        Kn=spinorial_k(n),
        lam_sphere=lambda_sphere(n),
        lam_hemisphere=lambda_hemisphere(n),
        hijazi_gap=gap,
    )


def upper_bound(n: int, max_h: float = 1.0) -> float:
    """``K(n)^(-1) (max H)^(-2/p_D)``, the ceiling for ``lambda_min`` with weight ``H``."""
    _, p_d = critical_exponents(n)
    return lambda_sphere(n) * max_h ** (-2 / p_d)

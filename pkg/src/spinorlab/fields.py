"""Spinor and scalar fields sampled on flat rectangular tori.

A grid covers ``prod_j [-L_j/2, L_j/2)`` with ``N_j`` uniform samples per
axis; with even ``N_j`` the origin is a grid node. Each axis carries a spin
structure flag: ``"p"`` (periodic) or ``"a"`` (antiperiodic). Truncated
Euclidean boxes are the same objects with the field support kept away from
the seam.

Quadrature is the uniform trapezoid rule, which is spectrally accurate for
smooth periodic integrands.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .clifford import CliffordRep

SPIN_FLAGS = ("p", "a")


@dataclass(frozen=True)
class GridSpec:
    n: int
    sizes: tuple[int, ...]
    lengths: tuple[float, ...]
    spin: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        object.__setattr__(self, "lengths", tuple(float(s) for s in self.lengths))
        object.__setattr__(self, "spin", tuple(self.spin))
        if not (len(self.sizes) == len(self.lengths) == len(self.spin) == self.n):
            raise ValueError("sizes, lengths and spin must all have length n")
        if any(s < 2 for s in self.sizes):
            raise ValueError(f"every axis needs at least 2 samples, got {self.sizes}")
        if any(not (length > 0 and math.isfinite(length)) for length in self.lengths):
            raise ValueError(f"axis lengths must be finite and positive, got {self.lengths}")
        if any(s not in SPIN_FLAGS for s in self.spin):
            raise ValueError(f"spin flags must be 'p' or 'a', got {self.spin}")

    @classmethod
    def cube(cls, n: int, N: int, L: float = 2 * math.pi, spin: str = "a") -> "GridSpec":
        """Cubic grid with one spin flag (or a per-axis string) for all axes."""
        flags = tuple(spin) if len(spin) == n else (spin,) * n
        return cls(n, (N,) * n, (L,) * n, flags)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / N for L, N in zip(self.lengths, self.sizes))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    @property
    def npoints(self) -> int:
        return int(np.prod(self.sizes))

    @property
    def offsets(self) -> tuple[float, ...]:
        """Fourier index shift per axis: 0 (periodic) or 1/2 (antiperiodic)."""
        return tuple(0.5 if s == "a" else 0.0 for s in self.spin)

    def axes(self) -> list[np.ndarray]:
        return [-L / 2 + np.arange(N) * (L / N) for L, N in zip(self.lengths, self.sizes)]

    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``sizes + (n,)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def displacement(self, center) -> np.ndarray:
        """Minimal-image displacement ``x - center`` on the torus, shape ``sizes + (n,)``."""
        center = np.asarray(center, dtype=float)
        lengths = np.asarray(self.lengths)
        d = self.coords() - center
        return d - lengths * np.round(d / lengths)

    def index_of(self, point) -> tuple[int, ...]:
        """Grid index of ``point``; raises if the point is not a node."""
        idx = []
        for x, L, N in zip(point, self.lengths, self.sizes):
            t = (x + L / 2) / (L / N)
            m = int(round(t))
            if abs(t - m) > 1e-9:
                raise ValueError(f"point {tuple(point)} is not a grid node")
            idx.append(m % N)
        return tuple(idx)

    def header_fields(self) -> dict[str, str]:
        return {
            "n": str(self.n),
            "dims": ",".join(str(s) for s in self.sizes),
            "lens": ",".join(repr(v) for v in self.lengths),
            "spin": "".join(self.spin),
        }


@dataclass(frozen=True)
class SpinorField:
    grid: GridSpec
    rep: CliffordRep
    values: np.ndarray

    def __post_init__(self):
        if self.rep.n != self.grid.n:
            raise ValueError(f"representation dimension {self.rep.n} != grid dimension {self.grid.n}")
        vals = np.asarray(self.values, dtype=complex)
        expected = self.grid.sizes + (self.rep.fiber_dim,)
        if vals.shape != expected:
            raise ValueError(f"values have shape {vals.shape}, expected {expected}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("spinor field contains non-finite entries")
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, grid: GridSpec, rep: CliffordRep) -> "SpinorField":
        return cls(grid, rep, np.zeros(grid.sizes + (rep.fiber_dim,), dtype=complex))

    def like(self, values) -> "SpinorField":
        return SpinorField(self.grid, self.rep, values)

    def modulus(self) -> np.ndarray:
        return np.sqrt(np.sum(np.abs(self.values) ** 2, axis=-1))

    def __add__(self, other: "SpinorField") -> "SpinorField":
        _check_same(self, other)
        return self.like(self.values + other.values)

    def __sub__(self, other: "SpinorField") -> "SpinorField":
        _check_same(self, other)
        return self.like(self.values - other.values)

    def __mul__(self, c) -> "SpinorField":
        return self.like(self.values * c)

    __rmul__ = __mul__


@dataclass(frozen=True)
class ScalarField:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.sizes:
            raise ValueError(f"values have shape {vals.shape}, expected {self.grid.sizes}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("scalar field contains non-finite entries")
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, grid: GridSpec, c: float = 1.0) -> "ScalarField":
        return cls(grid, np.full(grid.sizes, float(c)))

    def require_positive(self, what: str = "H") -> "ScalarField":
        if not np.all(self.values > 0):
            raise ValueError(f"{what} must be strictly positive")
        return self


def _check_same(f: SpinorField, g: SpinorField) -> None:
    if f.grid != g.grid or f.rep.n != g.rep.n:
        raise ValueError("fields live on different grids")


def lp_norm(f: SpinorField, p: float, weight: ScalarField | None = None) -> float:
    """``(sum_x w(x) |f(x)|^p dV)^(1/p)``; an infinite ``p`` gives the sup norm."""
    if p < 1:
        raise ValueError(f"L^p norm needs p >= 1, got {p}")
    mod = f.modulus()
    if math.isinf(p):
        return float(mod.max())
    dens = mod**p
    if weight is not None:
        if weight.grid != f.grid:
            raise ValueError("weight lives on a different grid")
        if np.any(weight.values <= 0):
            raise ValueError("weight must be positive")
        dens = dens * weight.values
    return float((dens.sum() * f.grid.cell_volume) ** (1.0 / p))


def pairing(f: SpinorField, g: SpinorField) -> complex:
    """``sum_x <f(x), g(x)> dV`` with the fiber product linear in the first slot."""
    _check_same(f, g)
    return complex(np.vdot(g.values, f.values) * f.grid.cell_volume)


def integrate(grid: GridSpec, density) -> float:
    return float(np.sum(density) * grid.cell_volume)


def boundary_shell_mass(f: SpinorField, fraction: float = 0.05) -> float:
    """Share of ``||f||_2^2`` sitting in the outer ``fraction`` of the box.

    Used as the seam error of box-truncated Euclidean fields.
    """
    x = f.grid.coords()
    half = np.asarray(f.grid.lengths) / 2
    outer = np.any(np.abs(x) >= (1 - fraction) * half, axis=-1)
    dens = f.modulus() ** 2
    total = dens.sum()
    return float(dens[outer].sum() / total) if total > 0 else 0.0


def elementary_split_constant(p: float, eps: float) -> float:
    """Constant ``C_eps`` with ``(a+b)^p <= (1+eps) a^p + C_eps b^p`` for ``a, b >= 0``.

    For ``p`` in ``(0, 1)`` this returns ``(1 - (1+eps)^(-1/(1-p)))^(-(1-p))``,
    which is valid though conservative there (subadditivity already allows 1).
    For ``p > 1`` it is the sharp ``(1 - (1+eps)^(-1/(p-1)))^(-(p-1))``.
    """
    if p <= 0:
        raise ValueError(f"exponent must be positive, got {p}")
    if eps <= 0:
        raise ValueError("eps must be positive")
    if p == 1:
        return 1.0
    s = abs(1 - p)
    return float((1 - (1 + eps) ** (-1 / s)) ** (-s))

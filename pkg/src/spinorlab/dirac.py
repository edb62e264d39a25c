"""Flat Dirac operator on tori, applied spectrally.

A field with spin flags ``delta_j in {0, 1/2}`` expands in plane waves
``exp(i k.x)`` with ``k_j = 2 pi (m_j + delta_j) / L_j``. Multiplying by the
twist ``exp(-2 pi i delta.x / L)`` makes it periodic, so one FFT diagonalizes
``D``; its symbol is ``sigma(k) = i sum_j k_j gamma_j`` (Hermitian, squares to
``|k|^2``). FFTs are forward-unnormalized with the inverse divided by
``prod N_j`` (the scipy default). On periodic axes with even ``N`` the Nyquist
wavenumber is set to zero for the first-order symbol, which keeps the
discrete spectrum symmetric.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .clifford import CliffordRep
from .fields import GridSpec, ScalarField, SpinorField


class ZeroModeError(ValueError):
    """The spin structure admits harmonic (constant) spinors, so D is not invertible."""


def fft_workers() -> int:
    try:
        return max(1, int(os.environ.get("SPINORLAB_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True, eq=False)
class DiracOperator:
    grid: GridSpec
    rep: CliffordRep
    workers: int = field(default_factory=fft_workers)

    def __post_init__(self):
        if self.grid.n != self.rep.n:
            raise ValueError("grid and Clifford representation disagree on the dimension")

    # --- mode tables -------------------------------------------------
    @cached_property
    def mode_index(self) -> list[np.ndarray]:
        """Per-axis shifted indices ``m_j + delta_j`` in FFT order."""
        out = []
        for N, d in zip(self.grid.sizes, self.grid.offsets):
            out.append(np.fft.fftfreq(N, 1.0 / N) + d)
        return out

    @cached_property
    def wavenumbers(self) -> list[np.ndarray]:
        """Per-axis wavenumbers used by the first-order symbol."""
        ks = []
        for m, N, L, d in zip(self.mode_index, self.grid.sizes, self.grid.lengths, self.grid.offsets):
            k = 2 * np.pi * m / L
            if d == 0.0 and N % 2 == 0:
                k = k.copy()
                k[N // 2] = 0.0
            ks.append(k)
        return ks

    def _axis_shape(self, j: int) -> tuple[int, ...]:
        shape = [1] * (self.grid.n + 1)
        shape[j] = self.grid.sizes[j]
        return tuple(shape)

    @cached_property
    def ksq(self) -> np.ndarray:
        """``|k|^2`` on the spatial mode grid."""
        out = np.zeros(self.grid.sizes)
        for j, k in enumerate(self.wavenumbers):
            out = out + (k**2).reshape(self._axis_shape(j)[:-1])
        return out

    @property
    def invertible(self) -> bool:
        return "a" in self.grid.spin

    @cached_property
    def _twist(self) -> np.ndarray | None:
        if not self.invertible:
            return None
        phase = np.zeros(self.grid.sizes)
        for j, (x, L, d) in enumerate(zip(self.grid.axes(), self.grid.lengths, self.grid.offsets)):
            phase = phase + (2 * np.pi * d * x / L).reshape(self._axis_shape(j)[:-1])
        return np.exp(-1j * phase)[..., None]

    # --- transforms --------------------------------------------------
    def _axes(self) -> tuple[int, ...]:
        return tuple(range(self.grid.n))

    def to_modes(self, values: np.ndarray) -> np.ndarray:
        if self._twist is not None:
            values = values * self._twist
        return sfft.fftn(values, axes=self._axes(), workers=self.workers)

    def from_modes(self, modes: np.ndarray) -> np.ndarray:
        values = sfft.ifftn(modes, axes=self._axes(), workers=self.workers)
        if self._twist is not None:
            values = values * self._twist.conj()
        return values

    def apply_symbol(self, modes: np.ndarray) -> np.ndarray:
        out = np.zeros_like(modes)
        for j, (k, g) in enumerate(zip(self.wavenumbers, self.rep.gammas)):
            out += (1j * k).reshape(self._axis_shape(j)) * np.einsum("ab,...b->...a", g, modes)
        return out

    def symbol(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        return 1j * np.tensordot(k, self.rep.stacked(), axes=([-1], [0]))

    # --- operator actions --------------------------------------------
    def _check(self, f: SpinorField) -> None:
        if f.grid != self.grid or f.rep.n != self.rep.n:
            raise ValueError("field does not match the operator's grid")

    def apply(self, f: SpinorField) -> SpinorField:
        self._check(f)
        return f.like(self.from_modes(self.apply_symbol(self.to_modes(f.values))))

    def invert(self, f: SpinorField, mollifier: float = 0.0) -> SpinorField:
        """``D^{-1} f``, optionally with a Gaussian factor ``exp(-mollifier |k|^2)``."""
        self._check(f)
        if not self.invertible:
            raise ZeroModeError(
                "all axes periodic: constant spinors are harmonic, D has a zero mode"
            )
        modes = self.apply_symbol(self.to_modes(f.values))
        scale = 1.0 / self.ksq
        if mollifier:
            scale = scale * np.exp(-mollifier * self.ksq)
        return f.like(self.from_modes(modes * scale[..., None]))

    def gradient(self, f: SpinorField) -> np.ndarray:
        """Componentwise spectral gradient, shape ``(n,) + values.shape``."""
        self._check(f)
        modes = self.to_modes(f.values)
        return np.stack(
            [self.from_modes((1j * k).reshape(self._axis_shape(j)) * modes)
             for j, k in enumerate(self.wavenumbers)]
        )

    def dealias(self, values: np.ndarray, fraction: float = 2.0 / 3.0) -> np.ndarray:
        """Zero every mode with ``|m_j + delta_j| > fraction * N_j / 2`` on some axis."""
        modes = self.to_modes(values)
        keep = np.ones(self.grid.sizes, dtype=bool)
        for j, (m, N) in enumerate(zip(self.mode_index, self.grid.sizes)):
            keep &= (np.abs(m) <= fraction * N / 2).reshape(self._axis_shape(j)[:-1])
        return self.from_modes(modes * keep[..., None])

    # --- spectrum ----------------------------------------------------
    def spectrum(self) -> np.ndarray:
        """All eigenvalues of the discrete operator, sorted, with multiplicity."""
        if self.rep.fiber_dim == 1:
            # sigma(k) = i k (i) = -k
            return np.sort(-self.wavenumbers[0].ravel())
        mag = np.sqrt(self.ksq).ravel()
        half = self.rep.fiber_dim // 2
        return np.sort(np.concatenate([np.repeat(mag, half), np.repeat(-mag, half)]))

    def smallest_positive_eigenvalue(self) -> float:
        spec = self.spectrum()
        return float(spec[spec > 1e-12].min())

    # --- explicit fields ---------------------------------------------
    def plane_wave(self, m, sign: int = 1) -> SpinorField:
        """Eigenspinor ``exp(i k.x) s`` with ``D = sign |k|`` for shifted index ``m``.

        ``m`` holds the integer parts; the spin offsets are added here.
        """
        m = np.asarray(m, dtype=float) + np.asarray(self.grid.offsets)
        k = 2 * np.pi * m / np.asarray(self.grid.lengths)
        sym = self.symbol(k)
        w, vecs = np.linalg.eigh(sym)
        target = sign * np.linalg.norm(k)
        col = int(np.argmin(np.abs(w - target)))
        if abs(w[col] - target) > 1e-9:
            raise ValueError(f"no eigenvalue {target} for mode {tuple(m)}")
        s = vecs[:, col]
        phase = np.exp(1j * (self.grid.coords() @ k))
        return SpinorField(self.grid, self.rep, phase[..., None] * s)

    def lowest_mode(self) -> tuple[int, ...]:
        """Integer index of the lowest positive mode, lexicographically smallest on ties."""
        ks = self.ksq
        pos = ks > 1e-12
        kmin = ks[pos].min()
        cands = []
        for idx in zip(*np.nonzero(np.abs(ks - kmin) <= 1e-9 * kmin)):
            cands.append(tuple(int(round(self.mode_index[j][i] - self.grid.offsets[j]))
                               for j, i in enumerate(idx)))
        return min(cands)

    def lowest_eigenspinor(self, sign: int = 1) -> SpinorField:
        if self.rep.fiber_dim == 1:
            # eigenvalue is -k, so sign +1 needs the negative wavenumber
            m = self.lowest_mode()
            k = m[0] + self.grid.offsets[0]
            if np.sign(-k) != sign:
                m = (int(round(-k - self.grid.offsets[0])),)
            return self.plane_wave(m, sign=sign)
        return self.plane_wave(self.lowest_mode(), sign=sign)

    def random_band_limited(self, rng: np.random.Generator, band: float,
                            decay: float = 0.0) -> SpinorField:
        """Random field with Fourier support ``|m + delta|_inf <= band`` on every axis.

        Mode amplitudes are complex Gaussians damped by ``exp(-decay |m+delta|^2)``.
        Only in-band modes are drawn, in ascending order, so a given seed yields
        the same continuum field on every grid that resolves the band.
        """
        picks = []
        for m, N, d in zip(self.mode_index, self.grid.sizes, self.grid.offsets):
            inband = np.nonzero(np.abs(m) <= band)[0]
            inband = inband[np.argsort(m[inband])]
            wanted = np.arange(-math.floor(band + d), math.floor(band - d) + 1) + d
            if len(inband) != len(wanted) or (len(inband) and np.abs(m[inband]).max() >= N / 2):
                raise ValueError(f"band {band} is not resolved by {N} points")
            picks.append(inband)
        d = self.rep.fiber_dim
        shape = tuple(len(ix) for ix in picks) + (d,)
        amps = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        msq = np.zeros(shape[:-1])
        for j, ix in enumerate(picks):
            sub = [1] * self.grid.n
            sub[j] = len(ix)
            msq = msq + (self.mode_index[j][ix] ** 2).reshape(sub)
        amps *= np.exp(-decay * msq)[..., None]
        modes = np.zeros(self.grid.sizes + (d,), dtype=complex)
        modes[np.ix_(*picks)] = amps * self.grid.npoints
        return SpinorField(self.grid, self.rep, self.from_modes(modes))


def dirac_apply(op: DiracOperator, f: SpinorField) -> SpinorField:
    return op.apply(f)


def dirac_invert(op: DiracOperator, f: SpinorField) -> SpinorField:
    return op.invert(f)


def spectrum(op: DiracOperator) -> np.ndarray:
    return op.spectrum()


def conformal_dirac_apply(op: DiracOperator, f: SpinorField, u: ScalarField,
                          dealias: bool = True) -> SpinorField:
    """Dirac operator of ``exp(2u) g`` acting on ``f`` (spinor bundles identified).

    ``D_u f = exp(-(n+1)u/2) D(exp((n-1)u/2) f)``. The inner product is
    truncated by the 2/3 rule before differentiation unless ``u`` is constant,
    in which case it cannot alias.
    """
    if u.grid != f.grid:
        raise ValueError("conformal factor lives on a different grid")
    n = f.grid.n
    inner = np.exp(0.5 * (n - 1) * u.values)[..., None] * f.values
    if dealias and np.ptp(u.values) > 0:
        inner = op.dealias(inner)
    Df = op.apply(f.like(inner))
    return f.like(np.exp(-0.5 * (n + 1) * u.values)[..., None] * Df.values)

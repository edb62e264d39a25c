"""Explicit complex matrix representation of the Euclidean Clifford algebra.

Construction (fixed, so that entries can be pinned in regression tests):

* Euclidean Dirac matrices ``E_1..E_m`` for even ``m`` are built recursively,
  starting from the empty set in fiber dimension 1::

      E_j      -> E_j (x) sigma_3        (j <= m)
      E_{m+1}  =  I   (x) sigma_1
      E_{m+2}  =  I   (x) sigma_2

* for odd ``n`` the last matrix is the chirality element of the even
  representation ``E_n = i^{(n-1)/2} E_1 ... E_{n-1}`` (which is ``[1]`` for
  ``n = 1``).
* Clifford generators are ``gamma_j = i E_j``. They are anti-Hermitian and
  satisfy ``gamma_j gamma_k + gamma_k gamma_j = -2 delta_jk``.

All entries are in ``{0, +-1, +-i}``, so every relation holds exactly in
floating point.

Tables for small ``n`` (rows of each matrix, ``i`` = imaginary unit)::

    n=1  gamma_1 = [[i]]
    n=2  gamma_1 = [[0, i], [i, 0]]          gamma_2 = [[0, 1], [-1, 0]]
    n=3  gamma_1, gamma_2 as for n=2          gamma_3 = [[-i, 0], [0, i]]
    n=4  gamma_1 = i s1(x)s3 ... see ``build_clifford(4).gammas``

``n = 1`` is only meant as a cheap testbed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_DIM = 8

_I2 = np.eye(2, dtype=complex)
_S1 = np.array([[0, 1], [1, 0]], dtype=complex)
_S2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
_S3 = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class CliffordRep:
    n: int
    fiber_dim: int
    gammas: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self):
        for g in self.gammas:
            g.setflags(write=False)

    def stacked(self) -> np.ndarray:
        """Generators as one array of shape ``(n, fiber_dim, fiber_dim)``."""
        return np.stack(self.gammas)


def _euclidean_even(m: int) -> list[np.ndarray]:
    mats: list[np.ndarray] = []
    dim = 1
    for _ in range(m // 2):
        mats = [np.kron(e, _S3) for e in mats]
        eye = np.eye(dim, dtype=complex)
        mats.append(np.kron(eye, _S1))
        mats.append(np.kron(eye, _S2))
        dim *= 2
    return mats


def build_clifford(n: int, max_dim: int = MAX_DIM) -> CliffordRep:
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"Clifford dimension must be an integer >= 1, got {n!r}")
    if n > max_dim:
        raise ValueError(f"Clifford dimension {n} exceeds configured maximum {max_dim}")
    n = int(n)
    m = n - (n % 2)
    euc = _euclidean_even(m)
    dim = 2 ** (m // 2)
    if n % 2:
        chi = np.eye(dim, dtype=complex) * (1j ** (m // 2))
        for e in euc:
            chi = chi @ e
        euc.append(chi)
    gammas = tuple(np.ascontiguousarray(1j * e) for e in euc)
    return CliffordRep(n=n, fiber_dim=dim, gammas=gammas)


def clifford_mul(rep: CliffordRep, v, s) -> np.ndarray:
    """Clifford product ``v . s = sum_j v_j gamma_j s``.

    ``v`` has trailing axis ``n`` and ``s`` trailing axis ``fiber_dim``; leading
    axes broadcast, so whole fields can be multiplied pointwise.
    """
    v = np.asarray(v, dtype=float)
    s = np.asarray(s, dtype=complex)
    if v.shape[-1] != rep.n:
        raise ValueError(f"vector has length {v.shape[-1]}, expected {rep.n}")
    if s.shape[-1] != rep.fiber_dim:
        raise ValueError(f"fiber vector has length {s.shape[-1]}, expected {rep.fiber_dim}")
    symbol = np.tensordot(v, rep.stacked(), axes=([-1], [0]))
    return np.einsum("...ab,...b->...a", symbol, s)


def relation_defect(rep: CliffordRep) -> float:
    """Largest entry of ``g_j g_k + g_k g_j + 2 delta_jk`` and of ``g_j^* + g_j``."""
    eye = np.eye(rep.fiber_dim)
    worst = 0.0
    for j, gj in enumerate(rep.gammas):
        worst = max(worst, np.abs(gj.conj().T + gj).max())
        for k, gk in enumerate(rep.gammas):
            anti = gj @ gk + gk @ gj + 2.0 * (j == k) * eye
            worst = max(worst, np.abs(anti).max())
    return float(worst)

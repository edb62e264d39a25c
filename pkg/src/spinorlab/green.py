"""Green function of the Dirac operator, mass endomorphism and mass-corrected test spinors.

Near its pole the Green function splits as

    omega_{n-1} G(x, p) s = -(x - p)/|x - p|^n . s + v(x, p) s

with ``v`` smooth and harmonic, and ``alpha_p = v(p, p)`` is the mass
endomorphism. On a flat torus the wave-vector set is symmetric, so ``G`` is
exactly odd about ``p``; the regular part is odd as well and ``alpha_p``
vanishes. Local models with a prescribed mass are provided by
:class:`ChartModel` so that the mass-corrected test spinor can be studied with
``alpha_p`` having a positive eigenvalue.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .clifford import CliffordRep, clifford_mul
from .constants import critical_exponents, omega_n, upper_bound
from .dirac import DiracOperator, ZeroModeError
from .fields import GridSpec, SpinorField
from .killing import conformal_f, cutoff, cutoff_derivative, moments

SIGMA_LEVELS = 4


def singular_kernel(rep: CliffordRep, x: np.ndarray, s: np.ndarray) -> np.ndarray:
    """``-(1/omega_{n-1}) x/|x|^n . s`` at displacements ``x``; set to zero at ``x = 0``."""
    n = rep.n
    r = np.linalg.norm(x, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(r > 0, -1.0 / (omega_n(n - 1) * np.where(r > 0, r, 1.0) ** n), 0.0)
    s = np.broadcast_to(s, x.shape[:-1] + s.shape[-1:])
    return scale[..., None] * clifford_mul(rep, x, s)


def smoothed_singular_kernel(rep: CliffordRep, x: np.ndarray, s: np.ndarray, sigma: float) -> np.ndarray:
    """Heat-smoothed singular model ``e^(sigma Laplacian)`` applied to :func:`singular_kernel`.

    By Gauss' law the smoothed field is the bare one times the Gaussian mass
    inside radius ``r``, the regularized incomplete gamma ``P(n/2, r^2/(4 sigma))``.
    """
    r = np.linalg.norm(x, axis=-1)
    mass = special.gammainc(rep.n / 2, r**2 / (4 * sigma))
    return mass[..., None] * singular_kernel(rep, x, s)


def resolved_sigma(grid: GridSpec, tail: float = 36.0) -> float:
    """Smallest mollifier with ``exp(-sigma k_max^2) <= exp(-tail)`` on the grid."""
    kmax = min(math.pi / h for h in grid.spacing)
    return tail / kmax**2


@dataclass(frozen=True)
class GreenExpansion:
    grid: GridSpec
    rep: CliffordRep
    p: tuple[float, ...]
    G: np.ndarray = field(repr=False)        # (d, *sizes, d): column a is G(., p) e_a
    v_field: np.ndarray = field(repr=False)  # same layout; regular part inside sing_radius,
    #                                          smoothed omega G outside it
    alpha: np.ndarray = field(repr=False)
    sing_radius: float = 0.0
    sigma_schedule: tuple[float, ...] = ()
    alpha_by_sigma: tuple[np.ndarray, ...] = field(default=(), repr=False)
    alpha_parity: np.ndarray | None = field(default=None, repr=False)

    def column(self, a: int) -> SpinorField:
        return SpinorField(self.grid, self.rep, self.G[a])

    def apply(self, s: np.ndarray) -> SpinorField:
        """``G(., p) s`` for an arbitrary fiber vector ``s``."""
        return SpinorField(self.grid, self.rep, np.tensordot(s, self.G, axes=(0, 0)))

    def regular(self, s: np.ndarray) -> np.ndarray:
        return np.tensordot(s, self.v_field, axes=(0, 0))

    @property
    def self_adjoint_defect(self) -> float:
        return float(np.max(np.abs(self.alpha - self.alpha.conj().T)))

    def chart_model(self, shell: tuple[float, float] | None = None) -> "ChartModel":
        """Flat-chart model ``v(x) = alpha + sum_j x_j B_j`` fitted on a shell around ``p``.

        The shell avoids the first few lattice spacings, where the sampled
        Green function carries discretization error.
        """
        lo, hi = shell or (self.sing_radius / 8, self.sing_radius / 2)
        x = self.grid.displacement(self.p)
        r = np.linalg.norm(x, axis=-1)
        mask = (r >= lo) & (r <= hi)
        pts = x[mask]
        d = self.rep.fiber_dim
        # v(x) e_a for every a, as rows of shape (points, d*d)
        vals = np.stack([self.v_field[a][mask] for a in range(d)], axis=-1)
        target = (vals - self.alpha[None, :, :]).reshape(len(pts), d * d)
        coef, *_ = np.linalg.lstsq(pts, target, rcond=None)
        B = coef.reshape(self.grid.n, d, d)
        return ChartModel(self.rep, self.alpha, B)

    def save(self, prefix: str | Path) -> list[Path]:
        """SPF1 dumps of every ``G`` column and regular part plus a JSON sidecar."""
        from .io import atomic_write_text, write_spf1

        prefix = Path(prefix)
        paths = []
        for a in range(self.rep.fiber_dim):
            paths.append(write_spf1(f"{prefix}_G{a}.spf", self.column(a)))
            paths.append(write_spf1(f"{prefix}_v{a}.spf",
                                    SpinorField(self.grid, self.rep, self.v_field[a])))
        side = {
            "p": list(self.p),
            "sing_radius": self.sing_radius,
            "alpha": [[z.real, z.imag] for z in self.alpha.ravel()],
            "sigma_schedule": list(self.sigma_schedule),
        }
        paths.append(atomic_write_text(f"{prefix}.json", json.dumps(side, indent=2)))
        return paths


def _lattice_modes(D: DiracOperator, sigma: float, tail: float = 40.0):
    """Wave vectors of the torus dual lattice (with spin shifts) with ``sigma |k|^2 <= tail``."""
    kmax = math.sqrt(tail / sigma)
    axes = []
    for L, d in zip(D.grid.lengths, D.grid.offsets):
        mmax = int(math.ceil(kmax * L / (2 * math.pi))) + 1
        m = np.arange(-mmax, mmax + 1) + d
        axes.append(2 * np.pi * m / L)
    mesh = np.meshgrid(*axes, indexing="ij")
    k = np.stack([a.ravel() for a in mesh], axis=-1)
    ksq = np.sum(k**2, axis=-1)
    keep = (ksq > 0) & (sigma * ksq <= tail)
    return k[keep], ksq[keep]


def mollified_mass(D: DiracOperator, sigma: float) -> np.ndarray:
    """``omega_{n-1} G_sigma(p, p)`` summed over the full dual lattice.

    The Gaussian-mollified singular model vanishes at the pole by oddness, so
    this equals the heat-smoothed regular part at ``p``.
    """
    if not D.invertible:
        raise ZeroModeError("Green function needs an antiperiodic axis")
    k, ksq = _lattice_modes(D, sigma)
    weights = np.exp(-sigma * ksq) / ksq
    # sum_k w(k) sigma(k) with sigma(k) = i sum_j k_j gamma_j
    coeff = 1j * (weights @ k)
    mat = np.tensordot(coeff, D.rep.stacked(), axes=(0, 0))
    return omega_n(D.grid.n - 1) * mat / D.grid.volume


def richardson(values: Sequence[np.ndarray], ratio: float = 2.0, order: int = 1) -> np.ndarray:
    """Repeated Richardson elimination of ``sigma^order, sigma^(order+1), ...`` from a halving sequence."""
    table = [np.asarray(v) for v in values]
    k = order
    while len(table) > 1:
        f = ratio**k
        table = [(f * b - a) / (f - 1) for a, b in zip(table, table[1:])]
        k += 1
    return table[0]


def parity_mass(D: DiracOperator, G: np.ndarray, p, shells: int = 3) -> np.ndarray:
    """Even part of ``omega G + singular model`` on axis shells ``r = h, 2h, 3h``, fitted to ``r -> 0``.

    The singular model is odd, so the even part of ``omega G`` alone tends to
    ``v(p, p)``; a quadratic in ``r`` is fitted through the shell averages.
    """
    grid, d = D.grid, D.rep.fiber_dim
    center = grid.index_of(p)
    h = min(grid.spacing)
    w = omega_n(grid.n - 1)
    radii, means = [], []
    for s in range(1, shells + 1):
        acc = np.zeros((d, d), dtype=complex)
        count = 0
        for j in range(grid.n):
            step = int(round(s * h / grid.spacing[j]))
            plus = list(center)
            minus = list(center)
            plus[j] = (plus[j] + step) % grid.sizes[j]
            minus[j] = (minus[j] - step) % grid.sizes[j]
            # antiperiodic wrap flips the sign of the sampled values
            sp = -1.0 if (grid.spin[j] == "a" and center[j] + step >= grid.sizes[j]) else 1.0
            sm = -1.0 if (grid.spin[j] == "a" and center[j] - step < 0) else 1.0
            for a in range(d):
                acc[:, a] += 0.5 * w * (sp * G[a][tuple(plus)] + sm * G[a][tuple(minus)])
            count += 1
        radii.append(s * h)
        means.append(acc / count)
    radii = np.asarray(radii)
    stack = np.stack(means).reshape(len(radii), -1)
    coef = np.polyfit(radii, stack, min(2, len(radii) - 1))
    return coef[-1].reshape(d, d)


def green_function(D: DiracOperator, p, sing_radius: float | None = None,
                   sigma0: float | None = None, levels: int = SIGMA_LEVELS) -> GreenExpansion:
    """Green function with pole at the grid point ``p``, one column per fiber basis vector.

    ``G`` is the exact inverse of the discrete operator applied to the
    discrete delta. ``v_field`` is the regular part inside ``sing_radius``
    (outside it, plain ``omega G``), and ``alpha`` comes from the
    Gaussian-mollified lattice sum extrapolated in ``sigma``.
    """
    if not D.invertible:
        raise ZeroModeError("all axes periodic: D has harmonic spinors and no Green function")
    grid, rep = D.grid, D.rep
    idx = grid.index_of(p)
    p = tuple(float(c) for c in p)
    if sing_radius is None:
        sing_radius = min(grid.lengths) / 4
    d = rep.fiber_dim
    G = np.empty((d,) + grid.sizes + (d,), dtype=complex)
    for a in range(d):
        src = np.zeros(grid.sizes + (d,), dtype=complex)
        src[idx + (a,)] = 1.0 / grid.cell_volume
        G[a] = D.invert(SpinorField(grid, rep, src)).values

    if sigma0 is None:
        sigma0 = (min(grid.lengths) / (2 * math.pi)) ** 2 * 0.04
    sigmas = tuple(sigma0 * 2.0**-k for k in range(levels))
    by_sigma = tuple(mollified_mass(D, s) for s in sigmas)
    alpha = richardson(by_sigma)
    alpha = 0.5 * (alpha + alpha.conj().T) if np.allclose(alpha, alpha.conj().T, atol=1e-8) else alpha

    # The sharply truncated sum converges badly pointwise along the axes, so
    # the regular part is read from heat-smoothed quantities: smoothing leaves
    # the harmonic v unchanged and has a closed form for the singular model.
    x = grid.displacement(p)
    r = np.linalg.norm(x, axis=-1)
    inside = (r <= sing_radius)[..., None]
    w = omega_n(grid.n - 1)
    sigma_v = resolved_sigma(grid)
    v = np.empty_like(G)
    for a in range(d):
        src = np.zeros(grid.sizes + (d,), dtype=complex)
        src[idx + (a,)] = 1.0 / grid.cell_volume
        smooth = D.invert(SpinorField(grid, rep, src), mollifier=sigma_v).values
        e = np.zeros(d, dtype=complex)
        e[a] = 1.0
        sing = w * smoothed_singular_kernel(rep, x, e, sigma_v)
        v[a] = w * smooth - np.where(inside, sing, 0.0)
    return GreenExpansion(
        grid=grid, rep=rep, p=p, G=G, v_field=v, alpha=alpha, sing_radius=sing_radius,
        sigma_schedule=sigmas, alpha_by_sigma=by_sigma, alpha_parity=parity_mass(D, G, p),
    )


def mass_endomorphism(exp: GreenExpansion, tol: float = 1e-8) -> np.ndarray:
    """``alpha_p``, checked for self-adjointness and convergence of the sigma sequence."""
    if exp.self_adjoint_defect > tol:
        raise ValueError(f"mass endomorphism is not self-adjoint (defect {exp.self_adjoint_defect:.2e})")
    seq = exp.alpha_by_sigma
    if len(seq) >= 2:
        spread = float(np.max(np.abs(seq[-1] - seq[-2])))
        scale = max(float(np.max(np.abs(exp.alpha))), 1.0)
        if spread > 1e-6 * scale:
            raise ValueError(f"sigma extrapolation has not settled (last step {spread:.2e})")
    return exp.alpha


def dirac_harmonicity_defect(exp: GreenExpansion, inner: float, outer: float) -> float:
    """RMS of a second-order central-difference ``D v`` over ``inner <= |x-p| <= outer``.

    A local stencil keeps the cut at ``sing_radius`` from leaking into the
    ball, which spectral differentiation would do.
    """
    grid, rep = exp.grid, exp.rep
    x = grid.displacement(exp.p)
    r = np.linalg.norm(x, axis=-1)
    mask = (r >= inner) & (r <= outer)
    total = 0.0
    for a in range(rep.fiber_dim):
        v = exp.v_field[a]
        Dv = np.zeros_like(v)
        for j, (h, g) in enumerate(zip(grid.spacing, rep.gammas)):
            dv = (np.roll(v, -1, axis=j) - np.roll(v, 1, axis=j)) / (2 * h)
            Dv += np.einsum("ab,...b->...a", g, dv)
        total += float(np.sum(np.abs(Dv[mask]) ** 2))
    return math.sqrt(total / max(int(mask.sum()), 1))


# --- mass-corrected test spinor ------------------------------------------


@dataclass(frozen=True)
class ChartModel:
    """Flat-chart Green data: ``omega G(x) s = -x/|x|^n . s + (alpha + sum_j x_j B_j) s``.

    ``B`` is projected onto ``sum_j gamma_j B_j = 0`` so the regular part is
    harmonic and ``G`` stays a fundamental solution.
    """

    rep: CliffordRep
    alpha: np.ndarray
    B: np.ndarray | None = None

    def __post_init__(self):
        d = self.rep.fiber_dim
        a = np.asarray(self.alpha, dtype=complex)
        if a.shape != (d, d):
            raise ValueError("alpha must be a fiber endomorphism")
        object.__setattr__(self, "alpha", a)
        if self.B is None:
            B = np.zeros((self.rep.n, d, d), dtype=complex)
        else:
            B = np.asarray(self.B, dtype=complex)
            # orthogonal projection onto sum_j gamma_j B_j = 0, i.e. harmonic v
            L = np.einsum("jab,jbc->ac", self.rep.stacked(), B)
            B = B + np.einsum("jab,bc->jac", self.rep.stacked(), L) / self.rep.n
        object.__setattr__(self, "B", B)

    @classmethod
    def constant(cls, rep: CliffordRep, alpha) -> "ChartModel":
        return cls(rep, np.asarray(alpha, dtype=complex))

    @property
    def n(self) -> int:
        return self.rep.n

    def theta(self, x: np.ndarray, s: np.ndarray) -> np.ndarray:
        """``theta_p(x) = (v(x) - alpha) s``."""
        Bs = self.B @ s  # (n, d)
        return np.tensordot(x, Bs, axes=(-1, 0))



@dataclass(frozen=True)
class MassSpinorParams:
    n: int
    eps: float
    eigenvalue: float
    psi_p: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.eps <= 0 or self.eps >= 1:
            raise ValueError("eps must lie in (0, 1) so that eps < xi")

    @property
    def xi(self) -> float:
        return self.eps ** (1.0 / (self.n + 1))

    @property
    def eps0(self) -> float:
        return self.xi**self.n / self.eps * float(conformal_f(self.xi / self.eps)) ** (self.n / 2)

    @property
    def interface_amplitude(self) -> float:
        """``f(xi/eps)^(n/2)``, the constant carried by the interpolation zone."""
        return float(conformal_f(self.xi / self.eps)) ** (self.n / 2)


def choose_eigenpair(alpha: np.ndarray) -> tuple[float, np.ndarray]:
    """Largest eigenvalue of ``alpha`` and an eigenvector scaled to ``|psi_p|^2 = 1/2``.

    With that scale the inner-zone Killing piece has ``|psi|^2 = f^(n-1)``.
    """
    w, vecs = np.linalg.eigh(0.5 * (alpha + alpha.conj().T))
    i = int(np.argmax(w))
    return float(w[i]), vecs[:, i] / math.sqrt(2.0)


def mass_params(model_alpha: np.ndarray, n: int, eps: float) -> MassSpinorParams:
    lam, psi = choose_eigenpair(model_alpha)
    return MassSpinorParams(n=n, eps=eps, eigenvalue=lam, psi_p=psi)


def _zone_fields(model: ChartModel, params: MassSpinorParams, x: np.ndarray):
    """``Phi_eps`` and ``D Phi_eps`` at chart points ``x`` (trailing axis ``n``), zone by zone."""
    rep, n = model.rep, model.n
    eps, xi, e0, c = params.eps, params.xi, params.eps0, params.interface_amplitude
    s = params.psi_p
    r = np.linalg.norm(x, axis=-1)
    y = x / eps
    f = conformal_f(r / eps)
    sb = np.broadcast_to(s, x.shape[:-1] + s.shape)
    as_ = model.alpha @ s

    killing = (f ** (n / 2))[..., None] * (sb - clifford_mul(rep, y, sb))
    inner_phi = killing + e0 * as_
    inner_dphi = (n * f / (2 * eps))[..., None] * killing

    eta = cutoff(r, xi)[..., None]
    deta = cutoff_derivative(r, xi)
    with np.errstate(divide="ignore", invalid="ignore"):
        unit = np.where(r[..., None] > 0, x / np.where(r > 0, r, 1.0)[..., None], 0.0)
        green = np.where(r[..., None] > 0,
                         -clifford_mul(rep, x, sb) / np.where(r > 0, r, 1.0)[..., None] ** n, 0.0)
    theta = model.theta(x, s)
    annulus_phi = e0 * (green + as_ + theta - eta * theta) + eta * c * sb
    grad_eta = deta[..., None] * unit
    annulus_dphi = clifford_mul(rep, grad_eta, c * sb - e0 * theta)

    outer_phi = e0 * (green + as_ + theta)
    zone_inner = (r <= xi)[..., None]
    zone_annulus = ((r > xi) & (r < 2 * xi))[..., None]
    phi = np.where(zone_inner, inner_phi, np.where(zone_annulus, annulus_phi, outer_phi))
    dphi = np.where(zone_inner, inner_dphi, np.where(zone_annulus, annulus_dphi, 0.0))
    return phi, dphi


def sphere_rule(n: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Product quadrature on the unit sphere ``S^(n-1)``; weights sum to its area.

    Polar angles use Gauss-Jacobi nodes for the ``(1-t^2)^((n-3)/2)`` weight.
    """
    if n == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if n == 2:
        t = 2 * np.pi * (np.arange(2 * order) + 0.5) / (2 * order)
        return np.stack([np.cos(t), np.sin(t)], axis=-1), np.full(2 * order, np.pi / order)
    a = (n - 3) / 2
    nodes, weights = special.roots_jacobi(order, a, a)
    sub, sub_w = sphere_rule(n - 1, order)
    pts = [np.concatenate([np.sqrt(1 - t**2) * sub, np.full((len(sub), 1), t)], axis=-1) for t in nodes]
    wts = [w * sub_w for w in weights]
    return np.concatenate(pts), np.concatenate(wts)


def _radial_rule(breaks: Sequence[float], order: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.legendre.leggauss(order)
    rs, ws = [], []
    for a, b in zip(breaks, breaks[1:]):
        rs.append(0.5 * (b - a) * t + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * w)
    return np.concatenate(rs), np.concatenate(ws)


@dataclass(frozen=True)
class ChartQuotient:
    eps: float
    value: float
    bound: float
    numerator: float
    pairing: float

    @property
    def ratio(self) -> float:
        return self.value / self.bound


def chart_quotient(model: ChartModel, params: MassSpinorParams,
                   H: Callable[[np.ndarray], np.ndarray] | None = None, max_h: float = 1.0,
                   radial_order: int = 24, angular_order: int | None = None) -> ChartQuotient:
    """``F_{q_D}(Phi_eps)`` by quadrature in the flat chart around ``p``.

    ``D Phi_eps`` vanishes identically outside ``B(2 xi)``, so only that ball
    contributes to either integral. ``H`` is evaluated at chart points.
    """
    n = model.n
    q, p = critical_exponents(n)
    eps, xi = params.eps, params.xi
    breaks = [0.0]
    step = eps / 4
    while step < xi:
        breaks.append(step)
        step *= 2
    breaks.append(xi)
    breaks += list(np.linspace(xi, 2 * xi, 17)[1:])
    r, wr = _radial_rule(breaks, radial_order)
    if angular_order is None:
        angular_order = {2: 16, 3: 8, 4: 4}.get(n, 3)
    u, wu = sphere_rule(n, angular_order)
    num = pair = 0.0
    chunk = max(1, 200_000 // len(u))
    for i in range(0, len(r), chunk):
        rr, ww = r[i:i + chunk], wr[i:i + chunk]
        x = rr[:, None, None] * u[None, :, :]
        weight = (ww * rr ** (n - 1))[:, None] * wu[None, :]
        phi, dphi = _zone_fields(model, params, x)
        mod = np.sqrt(np.sum(np.abs(dphi) ** 2, axis=-1))
        h = 1.0 if H is None else H(x)
        num += float(np.sum(weight * h ** (-q / p) * mod**q))
        pair += float(np.sum(weight * np.real(np.sum(np.conj(phi) * dphi, axis=-1))))
    value = num ** (2 / q) / pair
    return ChartQuotient(eps=eps, value=value, bound=upper_bound(n, max_h), numerator=num, pairing=pair)


def predicted_mass_coefficient(n: int, eigenvalue: float) -> float:
    """Leading coefficient of ``F(Phi_eps)/bound - 1`` in ``eps^(n-1)``: ``-2^(n/2-1) lambda J / omega_n``."""
    return -(2.0 ** (n / 2 - 1)) * eigenvalue * moments(n).J / omega_n(n)


def fit_exponents(n: int) -> list[float]:
    """Powers of ``eps`` in ``F(Phi_eps)/bound - 1``, leading one first.

    ``n^2/(n+1)`` comes from the annulus and the Killing tail beyond ``xi``
    and sits only ``1/(n+1)`` above the leading power ``n - 1``, so it must be
    fitted rather than treated as noise. The rest are the next corrections
    (``(eps/xi)^2`` factors and the squared mass term).
    """
    lead, tail, shift = n - 1.0, n * n / (n + 1.0), 2.0 * n / (n + 1.0)
    return [lead, tail, lead + shift, tail + shift, 2.0 * lead]


def fit_mass_coefficient(n: int, eps, ratios, floor: float = 1e-11) -> tuple[float, list[float]]:
    """Least-squares fit of ``(ratio - 1)/eps^(n-1)`` on the powers from :func:`fit_exponents`.

    Points whose deviation is below ``floor`` are at rounding level and dropped.
    """
    eps = np.asarray(eps, dtype=float)
    y = np.asarray(ratios, dtype=float) - 1.0
    keep = np.abs(y) > floor
    if keep.sum() < 3:
        return 0.0, []
    eps, y = eps[keep], y[keep]
    powers = fit_exponents(n)
    cols = min(len(powers), int(keep.sum()) - 1)
    A = np.stack([eps ** (a - powers[0]) for a in powers[:cols]], axis=-1)
    coef, *_ = np.linalg.lstsq(A, y / eps ** powers[0], rcond=None)
    return float(coef[0]), [float(c) for c in coef]


def default_eps_sweep(n: int, count: int = 13) -> np.ndarray:
    """Geometric sweep keeping ``eps^(n-1)`` well above rounding level."""
    hi = 1e-2 if n <= 3 else 5e-2
    lo = max(1e-6, 10.0 ** (-9.0 / (n - 1)))
    return np.geomspace(hi, lo, count)


@dataclass
class CriterionResult:
    n: int
    eigenvalue: float
    eps: list[float]
    lambda_estimates: list[float]
    ratios: list[float]
    criterion_met: bool
    fitted_mass_coeff: float
    predicted_coeff: float
    lambda_j_coeff: float
    fit_terms: list[float]
    explanation: str = ""


def existence_criterion(model: ChartModel, eps_sweep: Sequence[float] | None = None,
                        H: Callable[[np.ndarray], np.ndarray] | None = None,
                        max_h: float = 1.0, tol: float = 1e-10) -> CriterionResult:
    """Sweep ``F_{q_D}(Phi_eps)`` and fit the ``eps^(n-1)`` coefficient of ``value/bound - 1``."""
    n = model.n
    if n < 2:
        raise ValueError("the criterion needs n >= 2")
    lam, _ = choose_eigenpair(model.alpha)
    if eps_sweep is None:
        eps_sweep = default_eps_sweep(n)
    eps = np.sort(np.asarray(eps_sweep, dtype=float))[::-1]
    values, ratios = [], []
    for e in eps:
        cq = chart_quotient(model, mass_params(model.alpha, n, float(e)), H=H, max_h=max_h)
        values.append(cq.value)
        ratios.append(cq.ratio)
    lead, terms = fit_mass_coefficient(n, eps, ratios)
    J = moments(n).J
    met = bool(lam > tol and lead < 0)
    if lam <= tol:
        why = f"largest mass eigenvalue {lam:.3e} is not positive"
    elif lead >= 0:
        why = "fitted eps^(n-1) coefficient is not negative"
    else:
        why = "positive mass eigenvalue lowers the quotient below the sphere bound"
    return CriterionResult(
        n=n, eigenvalue=lam, eps=[float(e) for e in eps], lambda_estimates=values,
        ratios=ratios, criterion_met=met, fitted_mass_coeff=lead,
        predicted_coeff=predicted_mass_coefficient(n, max(lam, 0.0)), lambda_j_coeff=-lam * J,
        fit_terms=terms, explanation=why,
    )


# --- grid realisation on a torus ------------------------------------------


def mass_test_spinor(exp: GreenExpansion, params: MassSpinorParams) -> SpinorField:
    """Three-zone ``Phi_eps`` sampled on the torus grid, using the computed Green function."""
    grid, rep = exp.grid, exp.rep
    if 2 * params.xi > min(grid.lengths) / 2:
        raise ValueError("the interpolation zone B(2 xi) does not fit in the box")
    x = grid.displacement(exp.p)
    r = np.linalg.norm(x, axis=-1)
    s = params.psi_p
    w = omega_n(grid.n - 1)
    green = w * np.tensordot(s, exp.G, axes=(0, 0))
    theta = exp.regular(s) - exp.alpha @ s
    eps, xi, e0, c = params.eps, params.xi, params.eps0, params.interface_amplitude
    killing = _raw_killing(rep, x, s, eps)
    eta = cutoff(r, xi)[..., None]
    inner = killing + e0 * (exp.alpha @ s)
    annulus = e0 * (green - eta * theta) + eta * c * s
    outer = e0 * green
    vals = np.where((r <= xi)[..., None], inner, np.where((r < 2 * xi)[..., None], annulus, outer))
    return SpinorField(grid, rep, vals)


def _raw_killing(rep: CliffordRep, x: np.ndarray, s: np.ndarray, eps: float) -> np.ndarray:
    y = x / eps
    f = conformal_f(np.linalg.norm(y, axis=-1))
    sb = np.broadcast_to(s, y.shape[:-1] + s.shape)
    return (f ** (rep.n / 2))[..., None] * (sb - clifford_mul(rep, y, sb))


@dataclass(frozen=True)
class ZoneChecks:
    outer_max: float
    inner_rel: float
    interface_jump: float


def zone_checks(D: DiracOperator, exp: GreenExpansion, params: MassSpinorParams) -> ZoneChecks:
    """Zone identities of ``Phi_eps`` on the grid.

    The spectral operator is nonlocal, so each zone is differentiated through
    its own smooth global extension: ``eps0 omega G`` for the outer zone and the
    Killing piece times a cutoff equal to 1 on ``B(xi)`` for the inner zone.
    """
    grid, rep, n = D.grid, D.rep, D.grid.n
    q, _ = critical_exponents(n)
    x = grid.displacement(exp.p)
    r = np.linalg.norm(x, axis=-1)
    s = params.psi_p
    w = omega_n(n - 1)
    eps, xi, e0 = params.eps, params.xi, params.eps0

    outer = SpinorField(grid, rep, e0 * w * np.tensordot(s, exp.G, axes=(0, 0)))
    d_outer = D.apply(outer).modulus()
    outer_max = float(d_outer[r >= 2 * xi].max())

    ext = _raw_killing(rep, x, s, eps) * cutoff(r, xi)[..., None] + e0 * (exp.alpha @ s)
    d_inner = D.apply(SpinorField(grid, rep, ext)).modulus()
    zone = r <= xi
    model = (n / 2) ** q * eps ** (-q) * conformal_f(r[zone] / eps) ** n
    inner_rel = float(np.max(np.abs(d_inner[zone] ** q - model)) / np.max(model))

    u, _ = sphere_rule(n, 8)
    shell = xi * u
    jump = _interface_jump(rep, exp.alpha, params, shell)
    return ZoneChecks(outer_max=outer_max, inner_rel=inner_rel, interface_jump=jump)


def _interface_jump(rep: CliffordRep, alpha: np.ndarray, params: MassSpinorParams,
                    shell: np.ndarray) -> float:
    """``max |Phi(xi^-) - Phi(xi^+)|`` on sphere points of radius ``xi`` (``eta = 1`` there).

    On ``r = xi`` the annulus formula reduces to
    ``eps0 (-x/|x|^n . s + alpha s) + f(xi/eps)^(n/2) s`` because ``theta``
    cancels the regular part.
    """
    n = rep.n
    s = params.psi_p
    sb = np.broadcast_to(s, shell.shape[:-1] + s.shape)
    inner = _raw_killing(rep, shell, s, params.eps) + params.eps0 * (alpha @ s)
    r = np.linalg.norm(shell, axis=-1)[..., None]
    outer = (params.eps0 * (-clifford_mul(rep, shell, sb) / r**n + alpha @ s)
             + params.interface_amplitude * sb)
    return float(np.max(np.linalg.norm(inner - outer, axis=-1)))

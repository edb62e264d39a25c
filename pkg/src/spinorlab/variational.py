"""Subcritical minimization of ``F_q`` under the pairing constraint.

For ``q`` in ``(q_D, 2)`` the minimizer ``psi_q`` of
``F_q(psi) = ||H^(-1/p) D psi||_q^2 / int <D psi, psi>`` normalized by
``int <D psi, psi> = 1`` gives ``phi_q = lambda_q^(1/2) psi_q`` with

    D phi_q = lambda_q H |phi_q|^(p-2) phi_q,    int H |phi_q|^p = 1.

The optimizer is Fourier-preconditioned gradient descent with
Barzilai-Borwein steps, non-monotone Armijo backtracking, directions projected
tangent to ``{Re int <D psi, psi> = 1}`` and a radial retraction onto it.
``|D psi|^q`` is smoothed to ``(|D psi|^2 + mu^2)^(q/2)`` with ``mu`` shrinking
over the stages. A Newton-Krylov polish on the unsmoothed equation finishes,
and residuals always refer to the unsmoothed equation.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import NoConvergence, newton_krylov

from .constants import conjugate, critical_exponents, upper_bound
from .dirac import DiracOperator, ZeroModeError
from .fields import ScalarField, SpinorField, lp_norm, pairing
from .functionals import functional_F

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverOptions:
    tolerance: float = 1e-6
    constraint_tolerance: float = 1e-8
    max_iter: int = 4000
    mu_schedule: tuple[float, ...] = tuple(1e-2 * 4.0**-k for k in range(5))
    warm_start: bool = True
    init_perturbation: float = 1e-2
    seed: int = 0
    armijo: float = 1e-4
    memory: int = 10
    stall_window: int = 100
    stall_tol: float = 1e-8
    stage_gtol: float = 1e-6
    polish: bool = True
    polish_ftol: float = 1e-11
    polish_maxiter: int = 200
    polish_drift: float = 1e-5


@dataclass
class SolutionReport:
    q: float
    p: float
    lambda_q: float
    field: SpinorField
    psi: SpinorField
    el_residual: float
    constraint_defect: float
    iterations: int
    converged: bool
    ipr: float
    branch: int = 1
    probe_values: dict[str, float] = field(default_factory=dict)

    def row(self) -> dict:
        return {
            "q": self.q,
            "lambda_q": self.lambda_q,
            "residual": self.el_residual,
            "constraint_defect": self.constraint_defect,
            "ipr": self.ipr,
            "iterations": self.iterations,
            "converged": int(self.converged),
        }


class _Objective:
    """Smoothed ``F_q`` and its gradient for the real inner product ``Re sum conj(a) b dV``."""

    def __init__(self, D: DiracOperator, H: ScalarField | None, q: float):
        self.D = D
        self.q = q
        self.p = conjugate(q)
        self.dv = D.grid.cell_volume
        self.w = 1.0 if H is None else H.values ** (-q / self.p)
        self.mu = 0.0
        positive = D.ksq[D.ksq > 0]
        self.kappa = float(positive.min()) if positive.size else 1.0

    def _dirac(self, x: np.ndarray) -> np.ndarray:
        return self.D.from_modes(self.D.apply_symbol(self.D.to_modes(x)))

    def value(self, x: np.ndarray, Dx: np.ndarray | None = None) -> float:
        if Dx is None:
            Dx = self._dirac(x)
        g = np.sum(np.abs(Dx) ** 2, axis=-1) + self.mu**2
        S = np.sum(self.w * g ** (self.q / 2)) * self.dv
        P = np.vdot(x, Dx).real * self.dv
        if P <= 0:
            return math.inf
        return S ** (2 / self.q) / P

    def value_grad(self, x: np.ndarray):
        Dx = self._dirac(x)
        g = np.sum(np.abs(Dx) ** 2, axis=-1) + self.mu**2
        S = np.sum(self.w * g ** (self.q / 2)) * self.dv
        P = np.vdot(x, Dx).real * self.dv
        F = S ** (2 / self.q) / P
        inner = (self.w * np.maximum(g, 1e-300) ** (self.q / 2 - 1))[..., None] * Dx
        gradN = 2 * S ** (2 / self.q - 1) * self._dirac(inner)
        grad = (gradN - 2 * F * Dx) / P
        return F, grad, P


def _inner(a: np.ndarray, b: np.ndarray, dv: float) -> float:
    return float(np.vdot(a, b).real * dv)


def _normalize(x: np.ndarray, obj: _Objective) -> np.ndarray | None:
    P = np.vdot(x, obj._dirac(x)).real * obj.dv
    return x / math.sqrt(P) if P > 0 else None


def _descend(obj: _Objective, x: np.ndarray, opts: SolverOptions, budget: int,
             gtol: float) -> tuple[np.ndarray, int]:
    """Preconditioned BB descent with non-monotone Armijo backtracking at fixed smoothing.

    The metric is ``kappa + |k|^2`` in Fourier space, which matches the
    second-order part of the functional and keeps BB steps near unity.
    """
    D = obj.D
    metric = (obj.kappa + D.ksq)[..., None]

    def precond(v):
        return D.from_modes(D.to_modes(v) / metric)

    def mnorm2(v):
        return _inner(v, D.from_modes(D.to_modes(v) * metric), obj.dv)

    def direction(x, g):
        # tangent to {Re <D x, x> = 1} in the preconditioned metric
        Dx = obj._dirac(x)
        d, n = precond(g), precond(Dx)
        return d - (_inner(d, Dx, obj.dv) / _inner(n, Dx, obj.dv)) * n

    F, g, _ = obj.value_grad(x)
    d = direction(x, g)
    step = 1.0
    x_prev = g_prev = None
    recent = [F]
    history = [F]
    it = 0
    while it < budget:
        if len(history) > opts.stall_window and history[-opts.stall_window - 1] - F <= opts.stall_tol * F:
            break
        gd = _inner(g, d, obj.dv)
        if math.sqrt(max(gd, 0.0)) <= gtol * max(1.0, F):
            break
        if x_prev is not None:
            s = x - x_prev
            sy = _inner(s, g - g_prev, obj.dv)
            if sy > 0:
                step = min(mnorm2(s) / sy, 1e6)
        t = step
        while True:
            trial = _normalize(x - t * d, obj)
            F_trial = math.inf if trial is None else obj.value(trial)
            if F_trial <= max(recent) - opts.armijo * t * gd:
                break
            t *= 0.5
            if t < 1e-20:
                return x, it
        x_prev, g_prev = x, g
        x = trial
        F, g, _ = obj.value_grad(x)
        d = direction(x, g)
        recent = (recent + [F])[-opts.memory:]
        history.append(F)
        it += 1
    return x, it


def _gauge(D: DiracOperator, x: np.ndarray) -> np.ndarray:
    """Rotate the global phase so the largest Fourier amplitude is real and positive."""
    modes = D.to_modes(x)
    idx = np.unravel_index(np.argmax(np.abs(modes)), modes.shape)
    c = modes[idx]
    return x * (abs(c) / c) if c != 0 else x


def euler_lagrange_residual(D: DiracOperator, H: ScalarField | None, report: "SolutionReport | None" = None,
                            *, phi: SpinorField | None = None, lam: float | None = None,
                            q: float | None = None) -> float:
    """``||D phi - lambda H |phi|^(p-2) phi||_2 / ||D phi||_2``."""
    if report is not None:
        phi, lam, q = report.field, report.lambda_q, report.q
    p = conjugate(q)
    Dphi = D.apply(phi)
    h = 1.0 if H is None else H.values
    rhs = (lam * h * phi.modulus() ** (p - 2))[..., None] * phi.values
    denom = lp_norm(Dphi, 2)
    return float(lp_norm(Dphi.like(Dphi.values - rhs), 2) / denom)


def constraint_defect(H: ScalarField | None, phi: SpinorField, q: float) -> float:
    p = conjugate(q)
    h = 1.0 if H is None else H.values
    return abs(float(np.sum(h * phi.modulus() ** p) * phi.grid.cell_volume) - 1.0)


def inverse_participation(f: SpinorField) -> float:
    """``||f||_4^4 / ||f||_2^4``, which grows as the field concentrates."""
    return lp_norm(f, 4) ** 4 / lp_norm(f, 2) ** 4


def default_probes(D: DiracOperator, opts: SolverOptions) -> dict[str, SpinorField]:
    """Lowest positive eigenspinor, slightly perturbed so saddles can be left."""
    e = D.lowest_eigenspinor(sign=1)
    rng = np.random.default_rng(opts.seed)
    if opts.init_perturbation:
        noise = D.random_band_limited(rng, band=2.5, decay=0.5)
        scale = opts.init_perturbation * lp_norm(e, 2) / max(lp_norm(noise, 2), 1e-300)
        e = e + noise * scale
    return {"eigenspinor": e}


def minimize_subcritical(D: DiracOperator, H: ScalarField | None, q: float,
                         opts: SolverOptions | None = None,
                         init: SpinorField | None = None,
                         probes: dict[str, SpinorField] | None = None) -> SolutionReport:
    """Minimize ``F_q`` for ``q`` strictly between ``q_D`` and 2."""
    opts = opts or SolverOptions()
    if not D.invertible:
        raise ZeroModeError("minimization needs an invertible Dirac operator")
    n = D.grid.n
    q_d = critical_exponents(n)[0] if n >= 2 else 1.0
    if not q_d < q < 2:
        raise ValueError(f"q = {q} is not in the subcritical window ({q_d}, 2)")
    if H is not None:
        H.require_positive()
    obj = _Objective(D, H, q)
    candidates = dict(default_probes(D, opts))
    if probes:
        candidates.update(probes)
    probe_values: dict[str, float] = {}
    best_name, best_val = None, math.inf
    for name, cand in candidates.items():
        val = functional_F(D, cand, H, q)
        probe_values[name] = val
        sign = np.sign(pairing(D.apply(cand), cand).real)
        if val < best_val and sign > 0:
            best_name, best_val = name, val
    start = init if init is not None else candidates[best_name]
    branch = 1
    if pairing(D.apply(start), start).real < 0:
        raise ValueError("initial field lies on the negative-pairing branch")
    x = _normalize(start.values.copy(), obj)

    total = 0
    for k, mu in enumerate(opts.mu_schedule):
        obj.mu = mu
        budget = opts.max_iter - total
        if budget <= 0:
            break
        last = k == len(opts.mu_schedule) - 1
        x, used = _descend(obj, x, opts, budget, opts.stage_gtol * (1.0 if last else 100.0))
        total += used
    rep = _report(D, H, q, x, obj, total, opts, branch, probe_values)
    # alternate Newton polishing with tighter unsmoothed descent
    stall = opts.stall_tol
    while not rep.converged:
        if opts.polish:
            polished = _polish(D, H, rep, opts)
            if polished is not None:
                rep = polished
                if rep.converged:
                    break
        budget = opts.max_iter - total
        stall *= 1e-2
        if budget <= 0 or stall < 1e-15:
            break
        x, used = _descend(obj, x, replace(opts, stall_tol=stall), budget, opts.stage_gtol)
        total += used
        rep = _report(D, H, q, x, obj, total, opts, branch, probe_values)
    if not rep.converged:
        log.warning("q=%.4f: not converged (residual %.2e, defect %.2e, %d iterations)",
                    q, rep.el_residual, rep.constraint_defect, total)
    return rep


def _polish(D: DiracOperator, H: ScalarField | None, rep: SolutionReport,
            opts: SolverOptions) -> SolutionReport | None:
    """Newton-Krylov on ``phi = lambda D^-1(H |phi|^(p-2) phi)`` started at the descent iterate.

    In this form the map is C^1 (``p > 2``) even where ``phi`` vanishes, so
    Newton converges where the descent crawls along lattice-pinned valleys.
    The result is kept only if ``lambda`` stays within ``polish_drift`` of the
    descent value, so the polish cannot jump to a distant critical point.
    """
    shape = rep.field.values.shape
    p, lam = rep.p, rep.lambda_q
    h = 1.0 if H is None else H.values[..., None]
    grid, clif = D.grid, D.rep

    def residual(v):
        phi = v.view(complex).reshape(shape)
        mod = np.sqrt(np.sum(np.abs(phi) ** 2, axis=-1))[..., None]
        rhs = lam * h * mod ** (p - 2) * phi
        return (phi - D.invert(SpinorField(grid, clif, rhs)).values).reshape(-1).view(float)

    start = np.ascontiguousarray(rep.field.values).reshape(-1).view(float).copy()
    try:
        sol = newton_krylov(residual, start, f_tol=opts.polish_ftol, maxiter=opts.polish_maxiter,
                            method="lgmres", line_search=None)
    except (NoConvergence, ValueError, FloatingPointError) as exc:
        log.info("polish failed: %s", exc)
        return None
    phi = sol.view(complex).reshape(shape)
    weight = 1.0 if H is None else H.values
    total = np.sum(weight * np.sum(np.abs(phi) ** 2, axis=-1) ** (p / 2)) * grid.cell_volume
    if not np.isfinite(total) or total <= 0:
        return None
    c = total ** (-1 / p)
    lam_new = lam * c ** (2 - p)
    if lam_new > lam * (1 + opts.polish_drift):
        return None
    psi = phi * (c / math.sqrt(lam_new))
    obj = _Objective(D, H, rep.q)
    new = _report(D, H, rep.q, psi, obj, rep.iterations, opts, rep.branch, rep.probe_values)
    return new if new.el_residual < rep.el_residual else None


def _report(D, H, q, x, obj, total, opts, branch, probe_values) -> SolutionReport:
    x = _gauge(D, x)
    psi = SpinorField(D.grid, D.rep, x)
    lam = functional_F(D, psi, H, q)
    phi = psi * math.sqrt(lam)
    res = euler_lagrange_residual(D, H, phi=phi, lam=lam, q=q)
    defect = constraint_defect(H, phi, q)
    converged = res <= opts.tolerance and defect <= opts.constraint_tolerance
    return SolutionReport(
        q=q, p=conjugate(q), lambda_q=lam, field=phi, psi=psi, el_residual=res,
        constraint_defect=defect, iterations=total, converged=converged,
        ipr=inverse_participation(phi), branch=branch, probe_values=dict(probe_values),
    )


def lambda_sweep(D: DiracOperator, H: ScalarField | None, q_list: Sequence[float],
                 opts: SolverOptions | None = None,
                 probes: dict[str, SpinorField] | None = None) -> list[SolutionReport]:
    """Solve along a descending list of exponents, warm-starting from the previous solution."""
    opts = opts or SolverOptions()
    qs = list(q_list)
    if any(b >= a for a, b in zip(qs, qs[1:])):
        raise ValueError("q_list must be strictly descending")
    reports: list[SolutionReport] = []
    prev: SpinorField | None = None
    for q in qs:
        pr = dict(probes or {})
        if prev is not None and opts.warm_start:
            pr["warm"] = prev
        rep = minimize_subcritical(D, H, q, opts, probes=pr)
        reports.append(rep)
        prev = rep.psi
    return reports


def extrapolate_critical(reports: Sequence[SolutionReport], n: int, degree: int = 1,
                         points: int = 3) -> float:
    """Polynomial extrapolation of ``q -> lambda_q`` to ``q_D`` from the ``points`` closest exponents.

    Near ``q_D`` minimizers concentrate and the curve steepens, so only the
    tail of the sweep is informative.
    """
    q_d = critical_exponents(n)[0]
    tail = sorted(reports, key=lambda r: r.q)[:points]
    qs = np.array([r.q for r in tail]) - q_d
    lams = np.array([r.lambda_q for r in tail])
    deg = min(degree, len(qs) - 1)
    return float(np.polyval(np.polyfit(qs, lams, deg), 0.0))


def nontriviality_check(lambda_estimate: float, H: ScalarField | None, n: int,
                        margin: float = 0.0) -> bool:
    """Strict test ``lambda < K(n)^(-1) (max H)^(-2/p_D)`` (shrunk by ``margin``)."""
    max_h = 1.0 if H is None else float(np.max(H.values))
    return bool(lambda_estimate < upper_bound(n, max_h) * (1 - margin))

"""Minimum-energy regional steering by the Hilbert uniqueness method.

The multiplier ``g`` lives on ``omega``.  In omega coordinates the operator
``Lambda = p_w H H^* p_w^*`` is the Gramian ``W``, the equation
``Lambda g = z_b - p_w psi~(b)`` becomes ``(W + eps I) g = rhs`` and the
control is ``u* = B^* phi`` with ``phi(t) = (b-t)**(alpha-1) K^*(b-t) p_w^* g``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from fradic.controllability import build_gramian
from fradic.dynamics import (
    CLASSICAL_LIMIT,
    ControlSignal,
    FractionalSystem,
    adjoint_control,
    apply_H,
    control_energy,
    free_evolution,
    mild_solution,
)
from fradic.spectral import OmegaBasis, Region

__all__ = [
    "HumProblem",
    "HumSolution",
    "CertificateReport",
    "SingularGramianError",
    "assemble_lambda",
    "solve",
    "minimum_energy_certificate",
    "control_grid",
]

DIRECT = "direct"
TRUNCATED = "truncated-spectrum"


class SingularGramianError(ValueError):
    """``W`` is numerically singular and no regularisation was requested."""


@dataclass(frozen=True, eq=False)
class HumProblem:
    """Steering problem ``p_w z(b) = z_b``.

    Parameters
    ----------
    sys : FractionalSystem
    region : Region
    target : callable, array or None
        ``z_b`` as a function of ``x``, as samples on the region grid, or
        ``None`` for the zero target.
    target_coefficients : array, optional
        Alternatively, global coefficients whose restriction is the target.
    eps : float, optional
        Tikhonov shift; defaults to ``eps_scale * trace(W) / n_omega``.
    eps_scale : float
    solver : str
        ``"direct"`` (shifted symmetric solve) or ``"truncated-spectrum"``
        (pseudo-inverse dropping eigenvalues below ``truncation_rtol``).
    omega_kind, n_omega
        Coordinates for ``g``; see :func:`fradic.spectral.omega_basis`.
    psi_kind : str
        Initial-condition convention for the free part ``psi~``.
    grid_size : int
        Number of control samples on ``[0, b)``.
    tolerance : float
        Relative residual below which the steering counts as converged.
    """

    sys: FractionalSystem
    region: Region
    target: Union[Callable, np.ndarray, None] = None
    target_coefficients: Optional[np.ndarray] = None
    eps: Optional[float] = None
    eps_scale: float = 1e-10
    solver: str = DIRECT
    truncation_rtol: float = 1e-13
    omega_kind: str = "restricted"
    n_omega: Optional[int] = None
    psi_kind: str = CLASSICAL_LIMIT
    grid_size: int = 200
    tolerance: float = 1e-3

    def __post_init__(self):
        if self.solver not in (DIRECT, TRUNCATED):
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.eps is not None and not self.eps >= 0:
            raise ValueError(f"eps must be >= 0, got {self.eps}")
        if not self.eps_scale >= 0:
            raise ValueError(f"eps_scale must be >= 0, got {self.eps_scale}")
        if self.grid_size < 2:
            raise ValueError("grid_size must be at least 2")
        self.region.check_inside(self.sys.basis.domain)

    def target_samples(self) -> np.ndarray:
        """``z_b`` on the region grid."""
        x, _ = self.region.grid()
        if self.target_coefficients is not None:
            return self.sys.basis.synthesize(self.target_coefficients, x)
        if self.target is None:
            return np.zeros_like(x)
        if callable(self.target):
            vals = np.asarray(self.target(x), dtype=float)
        else:
            vals = np.asarray(self.target, dtype=float)
        if vals.shape != x.shape or not np.all(np.isfinite(vals)):
            raise ValueError("target must give finite values on the region grid")
        return vals


@dataclass(frozen=True, eq=False)
class HumSolution:
    """Solved multiplier, control samples and forward check.

    ``g`` holds omega coordinates; ``h = R^T g`` the global coefficients of
    ``p_w^* g``.  ``energy`` integrates ``||u*||^2``; ``gram_energy`` is
    ``g^T W g``. ``residual`` is ``||p_w z(b, u*) - z_b||`` on omega after
    forward simulation.
    """

    problem: HumProblem
    omega: OmegaBasis
    W: np.ndarray
    eps: float
    g: np.ndarray
    h: np.ndarray
    control: ControlSignal
    times: np.ndarray
    controls: np.ndarray
    energy: float
    gram_energy: float
    x: np.ndarray
    target: np.ndarray
    reached: np.ndarray
    residual: float
    target_norm: float
    condition_number: float
    raw_g: np.ndarray = field(repr=False)
    raw_residual: float = math.nan

    @property
    def relative_residual(self) -> float:
        return self.residual / self.target_norm if self.target_norm > 0 else self.residual

    @property
    def regularized_condition_number(self) -> float:
        """Condition number of ``W + eps I``, the matrix actually inverted."""
        ev = np.linalg.eigvalsh(self.W) + self.eps
        return float(ev[-1] / ev[0]) if ev[0] > 0 else float("inf")

    @property
    def converged(self) -> bool:
        return self.relative_residual <= self.problem.tolerance

    def g_values(self) -> np.ndarray:
        """``g`` on the region grid."""
        return self.omega.synthesize(self.g)

    def g_extended(self, x) -> np.ndarray:
        """``p_w^* g`` at arbitrary points of the domain: zero outside omega."""
        x = np.asarray(x, dtype=float)
        xg = self.x
        inside = (x >= self.problem.region.lo) & (x <= self.problem.region.hi)
        out = np.zeros_like(x)
        out[inside] = np.interp(x[inside], xg, self.g_values())
        return out


@dataclass(frozen=True)
class CertificateReport:
    """Energy comparison of ``u*`` against feasible alternatives."""

    energy: float
    alternative_energies: np.ndarray
    orthogonality: np.ndarray
    feasibility: np.ndarray
    optimal: bool


def control_grid(b: float, n: int, delta: float = 1e-6) -> np.ndarray:
    """Chebyshev-type grid on ``[0, b - delta b]`` clustered toward ``b``."""
    k = np.arange(n)
    return (b - delta * b) * np.sin(0.5 * np.pi * k / (n - 1))


def assemble_lambda(prob: HumProblem) -> np.ndarray:
    """``Lambda`` in omega coordinates: the Gramian ``W``."""
    return build_gramian(prob.sys, prob.region, prob.omega_kind, prob.n_omega).W


def _solve_system(W, rhs, eps, solver, rtol):
    mu, U = np.linalg.eigh(W)
    top = max(float(mu[-1]), 0.0)
    c = U.T @ rhs
    if solver == TRUNCATED:
        keep = mu > rtol * top
        return U[:, keep] @ (c[keep] / mu[keep])
    if eps == 0.0:
        if top == 0.0 or mu[0] <= 1e-14 * top:
            raise SingularGramianError(
                "Gramian is numerically singular with eps = 0; set a positive eps "
                "or use the truncated-spectrum solver, or raise the truncation N")
    return U @ (c / (mu + eps))


def _forward(sys, omega, u, x):
    zb = mild_solution(sys, u, sys.b)
    return sys.basis.synthesize(zb, x)


def solve(prob: HumProblem) -> HumSolution:
    """Solve ``(W + eps I) g = z_b - p_w psi~(b)`` and verify by forward simulation."""
    sys = prob.sys
    rep = build_gramian(sys, prob.region, prob.omega_kind, prob.n_omega)
    W, ob = rep.W, rep.omega
    x, w = prob.region.grid()
    zb = prob.target_samples()
    psi = free_evolution(sys.replace(initial_kind=prob.psi_kind), sys.b)
    rhs = ob.project(zb - sys.basis.synthesize(psi, x))
    eps = prob.eps if prob.eps is not None else prob.eps_scale * float(np.trace(W)) / ob.n
    g = _solve_system(W, rhs, eps, prob.solver, prob.truncation_rtol)
    raw = _solve_system(W, rhs, 0.0, TRUNCATED, prob.truncation_rtol)

    h = ob.R.T @ g
    u = adjoint_control(sys, h)
    times = control_grid(sys.b, prob.grid_size)
    controls = u(times)
    energy = control_energy(sys, u) if np.any(h) else 0.0
    reached = _forward(sys, ob, u, x)
    res = float(np.sqrt(w @ (reached - zb) ** 2))
    raw_u = adjoint_control(sys, ob.R.T @ raw)
    raw_res = float(np.sqrt(w @ (_forward(sys, ob, raw_u, x) - zb) ** 2))
    return HumSolution(
        problem=prob, omega=ob, W=W, eps=float(eps), g=g, h=h, control=u, times=times,
        controls=controls, energy=float(energy), gram_energy=float(g @ W @ g), x=x,
        target=zb, reached=reached, residual=res, target_norm=float(np.sqrt(w @ zb**2)),
        condition_number=rep.condition_number, raw_g=raw, raw_residual=raw_res,
    )


def minimum_energy_certificate(sol: HumSolution, alternatives: Sequence[ControlSignal],
                               rtol: float = 1e-8) -> CertificateReport:
    """Compare ``J(u*)`` with the energies of other controls reaching the target.

    For each alternative ``u1`` the report gives ``J(u1)``, the optimality
    pairing ``int <u*, u* - u1> dt`` (computed as
    ``J(u*) - <p_w^* g, H u1>``) and the omega residual of ``u1``.
    """
    sys = sol.problem.sys
    _, w = sol.problem.region.grid()
    J = sol.energy
    energies, ortho, feas = [], [], []
    for u1 in alternatives:
        energies.append(control_energy(sys, u1))
        Hu1 = apply_H(sys, u1)
        ortho.append(J - float(sol.h @ Hu1))
        reached = sys.basis.synthesize(free_evolution(sys, sys.b) + Hu1, sol.x)
        feas.append(float(np.sqrt(w @ (reached - sol.target) ** 2)))
    energies = np.array(energies)
    optimal = bool(np.all(J <= energies + rtol * max(J, 1.0)))
    return CertificateReport(J, energies, np.array(ortho), np.array(feas), optimal)

"""Strategic-actuator rank test and the regional controllability Gramian."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from fradic.dynamics import FractionalSystem, _table
from fradic.spectral import (
    Actuator,
    OmegaBasis,
    Region,
    SpectralBasis,
    actuator_coefficients,
    certified_zero_modes,
    omega_basis,
    region_mass_matrix,
)

__all__ = [
    "GRAMIAN_DIAGNOSTIC",
    "GramianIntegrabilityError",
    "StrategicReport",
    "GramianReport",
    "build_Gj",
    "strategic_test",
    "mode_kernel_matrix",
    "build_gramian",
]

GRAMIAN_DIAGNOSTIC = "Gramian time-integral non-integrable: 2(α−1) ≤ −1"

RANK_RTOL = 1e-9
PD_RTOL = 1e-10


class GramianIntegrabilityError(ValueError):
    """Raised when ``int_0^b s**(2(alpha-1)) ds`` diverges, i.e. ``alpha <= 1/2``."""

    def __init__(self, alpha: float):
        super().__init__(f"{GRAMIAN_DIAGNOSTIC} (alpha={alpha})")
        self.alpha = alpha


@dataclass(frozen=True, eq=False)
class StrategicReport:
    """Outcome of the rank test over the modes ``j = 1..N``.

    ``failures`` lists ``(j, rank G_j, r_j)``; ``certified`` marks verdicts
    decided by exact rational arithmetic rather than by the singular-value
    tolerance ``tau_rank``.
    """

    strategic: bool
    r_max: int
    p: int
    N: int
    failures: list
    matrices: list = field(repr=False)
    ranks: list = field(repr=False)
    tau_rank: float = 0.0
    certified: bool = False
    reason: str = ""

    def summary(self) -> str:
        head = "strategic" if self.strategic else "not strategic"
        lines = [f"{head} (p={self.p}, r_max={self.r_max}, modes checked: 1..{self.N})"]
        if self.reason:
            lines.append(f"reason: {self.reason}")
        lines.append(f"rank tolerance: {self.tau_rank:.3e}"
                     + (" (zero pattern certified exactly)" if self.certified else ""))
        for j, rk, r in self.failures:
            lines.append(f"  mode {j}: rank G_j = {rk} < r_j = {r}")
        return "\n".join(lines)


@dataclass(frozen=True, eq=False)
class GramianReport:
    """The omega-projected Gramian ``W = R K R^T`` and its spectrum."""

    W: np.ndarray
    eigenvalues: np.ndarray
    min_eigenvalue: float
    tau_pd: float
    positive_definite: bool
    b: float
    N: int
    omega_kind: str
    n_omega: int
    K: np.ndarray = field(repr=False)
    omega: Optional[OmegaBasis] = field(default=None, repr=False)

    @property
    def condition_number(self) -> float:
        lo = self.min_eigenvalue
        return float(self.eigenvalues[-1] / lo) if lo > 0 else float("inf")


def build_Gj(actuators: Sequence[Actuator], basis: SpectralBasis, j: int) -> np.ndarray:
    """The ``p x r_j`` matrix ``G_j[i, k] = (p_{D_i} g_i, xi_jk)`` (``j`` is 1-based)."""
    if not 1 <= j <= basis.N:
        raise ValueError(f"mode index {j} outside 1..{basis.N}")
    sl = basis.slices()[j - 1]
    return np.vstack([actuator_coefficients(a, basis)[sl] for a in actuators])


def strategic_test(actuators: Sequence[Actuator], basis: SpectralBasis,
                   N: Optional[int] = None, region: Optional[Region] = None,
                   rtol: float = RANK_RTOL) -> StrategicReport:
    """Check ``p >= max r_j`` and ``rank G_j = r_j`` for ``j = 1..N``.

    Ranks come from singular values with the tolerance
    ``tau_rank = rtol * max_j sigma_max(G_j)``.  For the sine basis the zero
    pattern of the coefficients is also decided exactly and takes precedence.
    With ``region`` given, modes without mass on it are skipped.
    """
    actuators = list(actuators)
    if not actuators:
        raise ValueError("no actuators")
    N = basis.N if N is None else int(N)
    if not 1 <= N <= basis.N:
        raise ValueError(f"N must lie in 1..{basis.N}, got {N}")
    p = len(actuators)
    coef = np.vstack([actuator_coefficients(a, basis) for a in actuators])
    slices = basis.slices()[:N]
    r = basis.multiplicities[:N]
    r_max = int(r.max())
    mats = [coef[:, sl] for sl in slices]
    svals = [np.linalg.svd(G, compute_uv=False) for G in mats]
    smax = max((float(s[0]) for s in svals if s.size), default=0.0)
    tau = rtol * smax

    zeros = [certified_zero_modes(a, basis) for a in actuators]
    certified = all(z is not None for z in zeros) and r_max == 1
    mass = None
    if region is not None:
        M = region_mass_matrix(region, basis)
        mass = np.array([np.trace(M[sl, sl]) for sl in slices])

    ranks, failures = [], []
    for j, (s, rj) in enumerate(zip(svals, r), start=1):
        if certified:
            rank = 0 if all(z[j - 1] for z in zeros) else 1
        else:
            rank = int(np.sum(s > tau)) if smax > 0 else 0
        ranks.append(rank)
        if mass is not None and mass[j - 1] <= 1e-12:
            continue
        if rank < rj:
            failures.append((j, rank, int(rj)))
    reason = ""
    if p < r_max:
        reason = "p<r"
    elif failures:
        reason = "rank"
    return StrategicReport(p >= r_max and not failures, r_max, p, N, failures, mats, ranks,
                           tau, certified, reason)


def _check_alpha(alpha: float) -> None:
    if alpha <= 0.5:
        raise GramianIntegrabilityError(alpha)


def mode_kernel_matrix(sys: FractionalSystem) -> np.ndarray:
    """``K_il = (sum_m beta_i^m beta_l^m) int_0^b s**(2(alpha-1)) E_i(s) E_l(s) ds``.

    ``E_i(s) = E_{alpha,alpha}(-lam_i s**alpha)``; this is ``H H^*`` in the
    global modes.
    """
    _check_alpha(sys.alpha)
    _, w, E = _table(sys, sys.b, 2.0 * (sys.alpha - 1.0))
    T = (E * w) @ E.T
    K = (sys.beta.T @ sys.beta) * T
    return 0.5 * (K + K.T)


def build_gramian(sys: FractionalSystem, region: Region, omega_kind: str = "sine",
                  n_omega: Optional[int] = None, rtol: float = PD_RTOL) -> GramianReport:
    """Assemble ``W = R K R^T``, the Gramian ``p_w H H^* p_w^*`` in omega coordinates.

    Parameters
    ----------
    sys : FractionalSystem
    region : Region
    omega_kind : str
        ``"sine"`` (native sines on omega at the resolution omega inherits
        from the truncation) or ``"restricted"`` (orthonormalised global
        modes); see :func:`fradic.spectral.omega_basis`.
    n_omega : int, optional
        Number of omega coordinates.
    rtol : float
        ``tau_pd = rtol * trace(W) / n_omega``.

    Raises
    ------
    GramianIntegrabilityError
        For ``alpha <= 1/2``.
    """
    _check_alpha(sys.alpha)
    K = mode_kernel_matrix(sys)
    ob = omega_basis(region, sys.basis, omega_kind, n_omega)
    W = ob.R @ K @ ob.R.T
    W = 0.5 * (W + W.T)
    ev = np.linalg.eigvalsh(W)
    tau = rtol * float(np.trace(W)) / ob.n
    lo = float(ev[0])
    return GramianReport(W, ev, lo, tau, bool(lo > tau), sys.b, sys.basis.N, omega_kind,
                         ob.n, K, ob)

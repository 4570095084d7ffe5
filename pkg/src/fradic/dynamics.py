"""Mild solutions, the control-to-state map ``H`` and its adjoint, in spectral form.

Every operator is diagonal in the eigenbasis.  For a mode with eigenvalue
``lam`` the resolvent family acts through ``E_{alpha,alpha}(-lam t**alpha)``;
time integrals run in ``tau = T - s`` with the graded rule of
:mod:`fradic.quadrature`, so the weight ``tau**(alpha-1)`` and the
``tau**alpha`` dependence of the kernels are resolved near ``tau = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from fradic.mlf import kernel_weight, mittag_leffler
from fradic.quadrature import graded_rule
from fradic.spectral import Actuator, SpectralBasis, actuator_coefficients

__all__ = [
    "WEIGHTED_RL",
    "CLASSICAL_LIMIT",
    "FractionalSystem",
    "ControlSignal",
    "free_evolution",
    "apply_H",
    "apply_H_star",
    "adjoint_pairing",
    "mild_solution",
    "adjoint_state_phi",
    "adjoint_control",
    "control_energy",
]

#: ``lim_{t->0+} D^{alpha-1} z(t) = z0``: coefficients ``t**(alpha-1) E_{a,a}(-lam t**a) z0``
WEIGHTED_RL = "weighted-rl"
#: ``lim_{t->0+} z(t) = z0``: coefficients ``E_{a,1}(-lam t**a) z0``
CLASSICAL_LIMIT = "classical-limit"

_KINDS = (WEIGHTED_RL, CLASSICAL_LIMIT)


@dataclass(frozen=True, eq=False)
class FractionalSystem:
    """Order, horizon, eigenbasis, actuators and initial state.

    Parameters
    ----------
    alpha : float
        Order in ``(0, 1]``; ``alpha = 1`` is the classical heat equation.
    b : float
        Time horizon.
    basis : SpectralBasis
    actuators : sequence of Actuator
    z0 : array_like, optional
        Initial coefficients; zero when omitted.
    initial_kind : str
        ``"weighted-rl"`` or ``"classical-limit"``.
    nodes_per_panel : int
        Gauss nodes per panel of the time rule.
    """

    alpha: float
    b: float
    basis: SpectralBasis
    actuators: tuple
    z0: Optional[np.ndarray] = None
    initial_kind: str = WEIGHTED_RL
    nodes_per_panel: int = 16
    beta: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not self.b > 0:
            raise ValueError(f"horizon b must be positive, got {self.b}")
        acts = tuple(self.actuators)
        if not acts:
            raise ValueError("at least one actuator is required")
        if self.initial_kind not in _KINDS:
            raise ValueError(f"initial_kind must be one of {_KINDS}, got {self.initial_kind!r}")
        object.__setattr__(self, "actuators", acts)
        z0 = np.zeros(self.basis.size) if self.z0 is None else np.asarray(self.z0, float).copy()
        if z0.shape != (self.basis.size,):
            raise ValueError(f"z0 needs {self.basis.size} coefficients, got shape {z0.shape}")
        z0.setflags(write=False)
        object.__setattr__(self, "z0", z0)
        beta = np.vstack([actuator_coefficients(a, self.basis) for a in acts])
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)

    @property
    def p(self) -> int:
        return len(self.actuators)

    @property
    def lam(self) -> np.ndarray:
        return self.basis.mode_lambdas

    def replace(self, **changes) -> "FractionalSystem":
        kw = dict(alpha=self.alpha, b=self.b, basis=self.basis, actuators=self.actuators,
                  z0=self.z0, initial_kind=self.initial_kind,
                  nodes_per_panel=self.nodes_per_panel)
        kw.update(changes)
        return FractionalSystem(**kw)


@dataclass(frozen=True, eq=False)
class ControlSignal:
    """A control ``u : [0, b] -> R^p``.

    ``u(s) = (horizon - s)**endpoint_exponent * func(s)``, where ``func``
    maps an array of times to an array ``(p, len(s))``.  The factored form lets
    quadrature absorb an endpoint singularity into its weight.  ``breaks``
    lists interior times where ``func`` has kinks or jumps.
    """

    func: Callable[[np.ndarray], np.ndarray]
    p: int
    endpoint_exponent: float = 0.0
    horizon: Optional[float] = None
    breaks: tuple = ()

    def __post_init__(self):
        if self.endpoint_exponent != 0.0 and self.horizon is None:
            raise ValueError("a singular control needs its horizon")
        object.__setattr__(self, "breaks", tuple(float(t) for t in self.breaks))

    def smooth(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return np.asarray(self.func(s), dtype=float).reshape(self.p, s.size)

    def __call__(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = self.smooth(s)
        if self.endpoint_exponent != 0.0:
            out = out * (self.horizon - s) ** self.endpoint_exponent
        return out

    @classmethod
    def zero(cls, p: int) -> "ControlSignal":
        return cls(lambda s: np.zeros((p, np.size(s))), p)

    @classmethod
    def from_function(cls, f: Callable, p: int) -> "ControlSignal":
        return cls(f, p)

    @classmethod
    def constant(cls, values) -> "ControlSignal":
        v = np.atleast_1d(np.asarray(values, dtype=float))
        return cls(lambda s: np.repeat(v[:, None], np.size(s), axis=1), v.size)

    @classmethod
    def sampled(cls, t, values) -> "ControlSignal":
        """Piecewise-linear interpolation of samples ``values[m, k]`` at times ``t[k]``."""
        t = np.asarray(t, dtype=float)
        vals = np.atleast_2d(np.asarray(values, dtype=float))
        if vals.shape[1] != t.size or t.size < 2 or np.any(np.diff(t) <= 0):
            raise ValueError("sampled control needs increasing times and matching samples")
        if not np.all(np.isfinite(vals)):
            raise ValueError("control samples must be finite")

        def f(s):
            return np.vstack([np.interp(s, t, v) for v in vals])

        return cls(f, vals.shape[0], breaks=tuple(t[1:-1]))

    @classmethod
    def piecewise_constant(cls, edges, values) -> "ControlSignal":
        """Value ``values[m, k]`` on the cell ``[edges[k], edges[k+1])``."""
        edges = np.asarray(edges, dtype=float)
        vals = np.atleast_2d(np.asarray(values, dtype=float))
        if vals.shape[1] != edges.size - 1 or np.any(np.diff(edges) <= 0):
            raise ValueError("piecewise-constant control needs increasing edges and matching values")

        def f(s):
            k = np.clip(np.searchsorted(edges, s, side="right") - 1, 0, edges.size - 2)
            return vals[:, k]

        return cls(f, vals.shape[0], breaks=tuple(edges[1:-1]))


# -- kernel tables -----------------------------------------------------------


@lru_cache(maxsize=32)
def _kernel_table(alpha, lam_bytes, T, gamma, n, breaks):
    lam = np.frombuffer(lam_bytes)
    rule = graded_rule(gamma, alpha, float(lam.max()) * T**alpha, n, breaks=breaks)
    tau = T * rule.nodes
    E = kernel_weight(alpha, lam[:, None], tau[None, :])
    w = rule.weights * T ** (gamma + 1.0)
    for a in (tau, E, w):
        a.setflags(write=False)
    return tau, w, E


def _table(sys: FractionalSystem, T: float, gamma: float, s_breaks=()):
    tb = tuple(sorted({(T - s) / T for s in s_breaks if 0.0 < s < T}))
    return _kernel_table(float(sys.alpha), sys.lam.tobytes(), float(T), float(gamma),
                         sys.nodes_per_panel, tb)


def _integrand_factor(u: ControlSignal, T: float, tau: np.ndarray):
    """Split the control on ``[0, T]`` into (extra weight exponent, smooth samples)."""
    kappa = u.endpoint_exponent
    vals = u.smooth(T - tau)
    if kappa == 0.0:
        return 0.0, vals
    if u.horizon == T:
        return kappa, vals
    return 0.0, vals * (u.horizon - T + tau) ** kappa


def _check_channels(sys, u):
    if u.p != sys.p:
        raise ValueError(f"control has {u.p} channels, system has {sys.p} actuators")


# -- operators -----------------------------------------------------------------


def free_evolution(sys: FractionalSystem, t: float) -> np.ndarray:
    """Coefficients of the uncontrolled state at time ``t``."""
    if t < 0 or t > sys.b:
        raise ValueError(f"time {t} outside [0, {sys.b}]")
    z0 = sys.z0
    if not np.any(z0):
        return np.zeros_like(z0)
    a = sys.alpha
    if sys.initial_kind == CLASSICAL_LIMIT:
        if t == 0:
            return z0.copy()
        return mittag_leffler(-sys.lam * t**a, a, 1.0) * z0
    if t == 0:
        if a == 1.0:
            return z0.copy()
        raise ValueError("weighted-rl initial data makes the state unbounded at t = 0")
    return t ** (a - 1.0) * kernel_weight(a, sys.lam, t) * z0


def apply_H(sys: FractionalSystem, u: ControlSignal, t: Optional[float] = None) -> np.ndarray:
    """Duhamel term ``int_0^T (T-s)**(alpha-1) K(T-s) B u(s) ds``; ``T = b`` by default.

    Returns the coefficient vector over the flattened modes.
    """
    _check_channels(sys, u)
    T = sys.b if t is None else float(t)
    if not 0 < T <= sys.b:
        raise ValueError(f"time {T} outside (0, {sys.b}]")
    a = sys.alpha
    kappa = u.endpoint_exponent if u.horizon == T else 0.0
    tau, w, E = _table(sys, T, a - 1.0 + kappa, u.breaks)
    _, vals = _integrand_factor(u, T, tau)
    X = (E * w) @ vals.T  # (size, p)
    return np.einsum("mi,im->i", sys.beta, X)


def apply_H_star(sys: FractionalSystem, v, t) -> np.ndarray:
    """``(H* v)(t) = B* (b-t)**(alpha-1) K*(b-t) v``.

    ``t`` may be a scalar (result of shape ``(p,)``) or an array (result
    ``(p, len(t))``).
    """
    v = np.asarray(v, dtype=float)
    tt = np.asarray(t, dtype=float)
    tau = sys.b - np.atleast_1d(tt)
    if np.any(tau < 0) or np.any(np.atleast_1d(tt) < 0):
        raise ValueError(f"times must lie in [0, {sys.b})")
    if sys.alpha < 1.0 and np.any(tau == 0):
        raise ValueError("H* is singular at t = b for alpha < 1")
    E = kernel_weight(sys.alpha, sys.lam[:, None], tau[None, :])
    out = tau ** (sys.alpha - 1.0) * (sys.beta @ (E * v[:, None]))
    return out[:, 0] if tt.ndim == 0 else out


def adjoint_pairing(sys: FractionalSystem, u: ControlSignal, v) -> float:
    """``int_0^b <u(s), (H* v)(s)> ds`` on the singular time rule."""
    _check_channels(sys, u)
    v = np.asarray(v, dtype=float)
    a = sys.alpha
    kappa = u.endpoint_exponent if u.horizon == sys.b else 0.0
    tau, w, E = _table(sys, sys.b, a - 1.0 + kappa, u.breaks)
    _, vals = _integrand_factor(u, sys.b, tau)
    hv = sys.beta @ (E * v[:, None])  # smooth part of H* v at the nodes
    return float(np.sum(vals * hv, axis=0) @ w)


def mild_solution(sys: FractionalSystem, u: Optional[ControlSignal], t: float) -> np.ndarray:
    """State coefficients at time ``t``: free evolution plus the Duhamel term."""
    z = free_evolution(sys, t)
    if u is not None and t > 0:
        z = z + apply_H(sys, u, t)
    return z


def adjoint_state_phi(sys: FractionalSystem, h, t) -> np.ndarray:
    """``phi(t) = (b-t)**(alpha-1) K*(b-t) h`` for the extended multiplier ``h = p_w^* g``.

    Scalar ``t`` gives a coefficient vector, an array gives ``(size, len(t))``.
    """
    h = np.asarray(h, dtype=float)
    tt = np.asarray(t, dtype=float)
    tau = sys.b - np.atleast_1d(tt)
    if np.any(tau < 0) or np.any(np.atleast_1d(tt) < 0):
        raise ValueError(f"times must lie in [0, {sys.b})")
    if sys.alpha < 1.0 and np.any(tau == 0):
        raise ValueError("phi is singular at t = b for alpha < 1")
    E = kernel_weight(sys.alpha, sys.lam[:, None], tau[None, :])
    out = tau ** (sys.alpha - 1.0) * E * h[:, None]
    return out[:, 0] if tt.ndim == 0 else out


def adjoint_control(sys: FractionalSystem, h) -> ControlSignal:
    """The control ``B* phi`` as a signal with endpoint exponent ``alpha - 1``."""
    h = np.asarray(h, dtype=float).copy()
    a, b, lam, beta = sys.alpha, sys.b, sys.lam, sys.beta

    def f(s):
        tau = np.maximum(b - np.asarray(s, dtype=float), 0.0)
        return beta @ (kernel_weight(a, lam[:, None], tau[None, :]) * h[:, None])

    if a == 1.0:
        return ControlSignal(f, sys.p)
    return ControlSignal(f, sys.p, endpoint_exponent=a - 1.0, horizon=b)


def control_energy(sys: FractionalSystem, u: ControlSignal) -> float:
    """``J(u) = int_0^b ||u(s)||**2 ds``."""
    _check_channels(sys, u)
    kappa = u.endpoint_exponent if u.horizon == sys.b else 0.0
    if kappa and not 2.0 * kappa > -1.0:
        raise ValueError("control energy diverges: 2 * endpoint exponent <= -1")
    tau, w, _ = _table(sys, sys.b, 2.0 * kappa, u.breaks)
    vals = u.smooth(sys.b - tau)
    if u.endpoint_exponent and not kappa:
        vals = vals * (u.horizon - sys.b + tau) ** u.endpoint_exponent
    return float(np.sum(vals**2, axis=0) @ w)

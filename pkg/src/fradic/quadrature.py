"""Quadrature for time integrals carrying an algebraic endpoint weight.

Integrals of the form ``int_0^b (b - s)**gamma f(s) ds`` are mapped to the
unit interval with ``s = b (1 - tau)``.  Two rules are offered:

* :func:`build_rule`, a single Gauss-Jacobi rule for the weight ``tau**gamma``,
  exact on polynomials of degree ``2n - 1``;
* :func:`graded_rule`, a composite rule for integrands that depend on
  ``tau**alpha`` (Mittag-Leffler kernels), which are not smooth at ``tau = 0``.
  One Gauss-Jacobi panel covers ``[0, tau0]`` and Gauss-Legendre panels grow
  geometrically from there to 1.

Both return objects with ``gamma``, ``nodes`` and ``weights`` attributes and
are accepted by :func:`integrate_weighted`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

__all__ = [
    "SingularRule",
    "CompositeRule",
    "build_rule",
    "graded_rule",
    "integrate_weighted",
    "DEFAULT_ORDER",
]

#: default number of nodes of a single Gauss-Jacobi rule
DEFAULT_ORDER = 64


def _check_gamma(gamma: float) -> None:
    if not gamma > -1.0:
        raise ValueError(f"weight exponent gamma={gamma} <= -1 is not integrable at 0")


@dataclass(frozen=True, eq=False)
class SingularRule:
    """Gauss rule for ``int_0^1 tau**gamma p(tau) dtau``.

    Attributes
    ----------
    gamma : float
        Weight exponent, ``> -1``.
    nodes : ndarray
        Increasing nodes in ``(0, 1)``.
    weights : ndarray
        Positive weights (the weight function is folded in).
    n : int
        Number of nodes.
    """

    gamma: float
    nodes: np.ndarray
    weights: np.ndarray
    n: int

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)


@dataclass(frozen=True, eq=False)
class CompositeRule:
    """Graded composite rule for ``int_0^1 tau**gamma f(tau) dtau``.

    Same attribute layout as :class:`SingularRule`; ``panels`` holds the
    panel edges in ``tau``.
    """

    gamma: float
    nodes: np.ndarray
    weights: np.ndarray
    n: int
    panels: np.ndarray

    def __post_init__(self):
        for a in (self.nodes, self.weights, self.panels):
            a.setflags(write=False)


@lru_cache(maxsize=128)
def _jacobi01(gamma: float, n: int):
    # Jacobi weight (1-x)^0 (1+x)^gamma on [-1, 1], mapped to tau = (1+x)/2
    x, w = roots_jacobi(n, 0.0, gamma)
    return 0.5 * (1.0 + x), w * 0.5 ** (gamma + 1.0)


def build_rule(gamma: float, n: int = DEFAULT_ORDER) -> SingularRule:
    """Gauss-Jacobi rule for the weight ``tau**gamma`` on ``(0, 1)``.

    Parameters
    ----------
    gamma : float
        Weight exponent; must exceed -1.
    n : int
        Number of nodes.

    Returns
    -------
    SingularRule
        Exact for ``int_0^1 tau**gamma p(tau) dtau`` with ``deg p <= 2n - 1``.
    """
    gamma = float(gamma)
    _check_gamma(gamma)
    if int(n) != n or n < 1:
        raise ValueError(f"rule order must be a positive integer, got {n}")
    x, w = _jacobi01(gamma, int(n))
    return SingularRule(gamma, x.copy(), w.copy(), int(n))


@lru_cache(maxsize=256)
def graded_rule(gamma: float, alpha: float = 1.0, stiffness: float = 1.0,
                n: int = 16, head: float = 1e-6, breaks: tuple = ()) -> CompositeRule:
    """Composite rule resolving kernels ``E(-lam * tau**alpha)`` near ``tau = 0``.

    Parameters
    ----------
    gamma : float
        Weight exponent, ``> -1``.
    alpha : float
        Power of ``tau`` inside the kernels.
    stiffness : float
        Largest ``lam * b**alpha`` the rule must handle.
    n : int
        Nodes per panel.
    head : float
        The first panel ``[0, tau0]`` is chosen with
        ``stiffness * tau0**alpha <= head``; there the kernels are close to
        constant and the Gauss-Jacobi panel absorbs the weight exactly.
    breaks : tuple of float
        Extra panel edges in ``(0, 1)``, e.g. kinks of a sampled integrand.

    Returns
    -------
    CompositeRule
    """
    _check_gamma(gamma)
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    stiffness = max(float(stiffness), 1.0)
    tau0 = (head / stiffness) ** (1.0 / alpha)
    m = max(1, math.ceil(math.log2(1.0 / tau0)))
    edges = 2.0 ** np.arange(-m, 1)
    extra = np.array([t for t in breaks if 0.0 < t < 1.0], dtype=float)
    if extra.size:
        edges = np.union1d(edges, extra)
        # keep every panel after the first within a factor 2 of its left end
        fill = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            k = math.ceil(math.log2(hi / lo) - 1e-12)
            fill.extend(lo * 2.0 ** np.arange(1, k))
        edges = np.union1d(edges, np.array(fill, dtype=float))
    edges = np.concatenate(([0.0], edges))
    xj, wj = _jacobi01(gamma, n)
    xl, wl = roots_legendre(n)
    nodes = [edges[1] * xj]
    weights = [wj * edges[1] ** (gamma + 1.0)]
    a = edges[1:-1, None]
    h = np.diff(edges[1:])[:, None]
    t = a + 0.5 * h * (1.0 + xl)
    nodes.append(t.ravel())
    weights.append((0.5 * h * wl * t**gamma).ravel())
    return CompositeRule(gamma, np.concatenate(nodes), np.concatenate(weights), n, edges)


def integrate_weighted(rule, b: float, f: Callable[[np.ndarray], np.ndarray]):
    """Approximate ``int_0^b (b - s)**gamma f(s) ds``.

    Uses ``s = b (1 - tau)``, i.e. ``b**(gamma+1) int_0^1 tau**gamma f(b(1-tau)) dtau``.
    ``f`` is called once with the array of all abscissae; it may return an
    array whose last axis runs over them, in which case the result keeps the
    leading axes.
    """
    if not b > 0:
        raise ValueError(f"horizon b must be positive, got {b}")
    s = b * (1.0 - rule.nodes)
    vals = np.asarray(f(s), dtype=float)
    return b ** (rule.gamma + 1.0) * (vals @ rule.weights)

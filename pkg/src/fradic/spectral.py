"""Eigenstructure of the state operator, actuator and region geometry.

All spatial inner products go through a composite Gauss-Legendre grid
(``resolution`` panels per unit length, 8 nodes per panel), except where a
closed form is exact: zone integrals of the sine basis and point evaluations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import roots_legendre

__all__ = [
    "SpectralBasis",
    "Actuator",
    "Region",
    "dirichlet_laplacian_basis",
    "periodic_laplacian_basis",
    "gauss_grid",
    "actuator_coefficients",
    "certified_zero_modes",
    "region_mass_matrix",
    "restrict",
    "extend_by_zero",
    "OmegaBasis",
    "omega_basis",
]

DEFAULT_RESOLUTION = 256
_PANEL_ORDER = 8


def gauss_grid(lo: float, hi: float, resolution: int = DEFAULT_RESOLUTION,
               order: int = _PANEL_ORDER):
    """Nodes and weights of a composite Gauss-Legendre rule on ``[lo, hi]``."""
    if not hi > lo:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    panels = max(1, math.ceil(resolution * (hi - lo) - 1e-9))
    x, w = roots_legendre(order)
    edges = np.linspace(lo, hi, panels + 1)
    h = np.diff(edges)[:, None]
    nodes = edges[:-1, None] + 0.5 * h * (1.0 + x)
    return nodes.ravel(), (0.5 * h * w).ravel()


def _sinpi(u):
    """``sin(pi u)`` with exact zeros at integers and exact +-1 at half integers."""
    u = np.asarray(u, dtype=float)
    r = u - 2.0 * np.round(0.5 * u)  # r in [-1, 1]
    out = np.sin(np.pi * r)
    out = np.where(r == np.round(r), 0.0, out)
    half = (2.0 * r == np.round(2.0 * r)) & (r != np.round(r))
    return np.where(half, np.sign(r), out)


def _cospi(u):
    return _sinpi(np.asarray(u, dtype=float) + 0.5)


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Eigenpairs of ``-A`` on an interval, truncated to ``N`` eigenvalues.

    Modes are flattened in the order ``(1,1), ..., (1,r_1), (2,1), ...``;
    ``size`` is the total count ``sum(r_j)``.

    Attributes
    ----------
    eigenvalues : ndarray
        Distinct eigenvalues ``0 < lam_1 < lam_2 < ...``, length ``N``.
    multiplicities : ndarray
        ``r_j >= 1`` for each eigenvalue.
    eigfun : callable
        ``eigfun(x)`` returns the array ``(size, len(x))`` of all
        eigenfunctions at ``x``.
    domain : tuple
        ``(x_lo, x_hi)``.
    kind : str
        ``"dirichlet"``, ``"periodic"`` or a user tag. The sine basis gets
        closed-form zone integrals.
    """

    eigenvalues: np.ndarray
    multiplicities: np.ndarray
    eigfun: Callable[[np.ndarray], np.ndarray]
    domain: tuple
    kind: str = "custom"
    resolution: int = DEFAULT_RESOLUTION

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        r = np.asarray(self.multiplicities, dtype=int)
        if lam.ndim != 1 or lam.size < 1 or lam.shape != r.shape:
            raise ValueError("eigenvalues and multiplicities must be matching 1-d arrays")
        if not (lam[0] > 0 and np.all(np.diff(lam) > 0)):
            raise ValueError("eigenvalues must be positive and strictly increasing")
        if np.any(r < 1):
            raise ValueError("multiplicities must be >= 1")
        if not self.domain[1] > self.domain[0]:
            raise ValueError(f"bad domain {self.domain}")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "multiplicities", r)
        lam.setflags(write=False)
        r.setflags(write=False)

    @property
    def N(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def size(self) -> int:
        return int(self.multiplicities.sum())

    @property
    def mode_lambdas(self) -> np.ndarray:
        """Eigenvalue of each flattened mode."""
        return np.repeat(self.eigenvalues, self.multiplicities)

    @property
    def mode_index(self) -> list:
        """``(j, k)`` labels (1-based) of the flattened modes."""
        return [(j + 1, k + 1) for j, r in enumerate(self.multiplicities) for k in range(r)]

    def slices(self) -> list:
        """Slice of the flattened modes belonging to each eigenvalue."""
        ends = np.cumsum(self.multiplicities)
        return [slice(int(e - r), int(e)) for e, r in zip(ends, self.multiplicities)]

    def evaluate(self, x) -> np.ndarray:
        """Eigenfunctions at ``x``: array ``(size, len(x))``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.asarray(self.eigfun(x), dtype=float).reshape(self.size, x.size)

    def grid(self):
        """Spatial quadrature nodes and weights on the whole domain."""
        return gauss_grid(*self.domain, self.resolution)

    def synthesize(self, coef, x) -> np.ndarray:
        """Evaluate ``sum_i coef_i xi_i(x)``."""
        return np.asarray(coef, dtype=float) @ self.evaluate(x)

    def truncate(self, N: int) -> "SpectralBasis":
        """Basis restricted to the first ``N`` eigenvalues."""
        if not 1 <= N <= self.N:
            raise ValueError(f"cannot truncate {self.N} modes to {N}")
        m = int(self.multiplicities[:N].sum())
        f = self.eigfun
        return SpectralBasis(self.eigenvalues[:N], self.multiplicities[:N],
                             lambda x: np.asarray(f(x))[:m], self.domain, self.kind,
                             self.resolution)


def dirichlet_laplacian_basis(N: int = 32, domain: Sequence[float] = (0.0, 1.0),
                              resolution: int = DEFAULT_RESOLUTION) -> SpectralBasis:
    """Sine basis of ``-d^2/dx^2`` with Dirichlet conditions.

    On ``[0, 1]``: ``lam_i = (i pi)**2`` and ``xi_i(x) = sqrt(2) sin(i pi x)``.
    """
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    lo, hi = float(domain[0]), float(domain[1])
    L = hi - lo
    i = np.arange(1, int(N) + 1, dtype=float)
    amp = math.sqrt(2.0 / L)

    def eigfun(x):
        u = (np.asarray(x, dtype=float) - lo) / L
        return amp * _sinpi(i[:, None] * u[None, :])

    return SpectralBasis((i * np.pi / L) ** 2, np.ones(int(N), dtype=int), eigfun,
                         (lo, hi), "dirichlet", resolution)


def periodic_laplacian_basis(N: int = 8, domain: Sequence[float] = (0.0, 1.0),
                             resolution: int = DEFAULT_RESOLUTION) -> SpectralBasis:
    """Periodic Laplacian without its constant mode: every eigenvalue is double.

    ``lam_j = (2 pi j / L)**2`` with the pair ``sqrt(2/L) cos``,
    ``sqrt(2/L) sin``. Useful for exercising the ``r_j > 1`` branch of the
    strategic test.
    """
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    lo, hi = float(domain[0]), float(domain[1])
    L = hi - lo
    j = np.arange(1, int(N) + 1, dtype=float)
    amp = math.sqrt(2.0 / L)

    def eigfun(x):
        u = (np.asarray(x, dtype=float) - lo) / L
        arg = 2.0 * j[:, None] * u[None, :]
        out = np.empty((2 * j.size, u.size))
        out[0::2] = amp * _cospi(arg)
        out[1::2] = amp * _sinpi(arg)
        return out

    return SpectralBasis((2.0 * np.pi * j / L) ** 2, np.full(int(N), 2), eigfun,
                         (lo, hi), "periodic", resolution)


@dataclass(frozen=True, eq=False)
class Actuator:
    """An actuator ``(D, g)``: a zone ``[a1, a2]`` with a spatial distribution,
    or a point ``sigma`` (Dirac pairing)."""

    kind: str
    a1: float = 0.0
    a2: float = 0.0
    sigma: float = 0.0
    distribution: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)
    label: str = ""
    scale: float = 1.0

    def __post_init__(self):
        if self.kind == "zone":
            if not self.a2 >= self.a1:
                raise ValueError(f"zone [{self.a1}, {self.a2}] is reversed")
        elif self.kind != "pointwise":
            raise ValueError(f"unknown actuator kind {self.kind!r}")

    @classmethod
    def zone(cls, a1, a2, distribution=None, label="", scale=1.0) -> "Actuator":
        return cls("zone", a1=float(a1), a2=float(a2), distribution=distribution,
                   label=label or f"zone[{a1},{a2}]", scale=float(scale))

    @classmethod
    def pointwise(cls, sigma, label="", scale=1.0) -> "Actuator":
        return cls("pointwise", sigma=float(sigma), label=label or f"point[{sigma}]",
                   scale=float(scale))

    def check_inside(self, domain) -> None:
        lo, hi = domain
        if self.kind == "zone":
            ok = lo <= self.a1 and self.a2 <= hi
        else:
            ok = lo <= self.sigma <= hi
        if not ok:
            raise ValueError(f"actuator {self.label} lies outside the domain {tuple(domain)}")


@dataclass(frozen=True)
class Region:
    """Subinterval ``omega = [lo, hi]`` of the state domain."""

    lo: float
    hi: float
    resolution: int = DEFAULT_RESOLUTION

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError(f"region [{self.lo}, {self.hi}] has no positive measure")
        if self.resolution < 1:
            raise ValueError("region resolution must be >= 1")

    @property
    def measure(self) -> float:
        return self.hi - self.lo

    def grid(self):
        """Quadrature nodes and weights on ``omega``."""
        return gauss_grid(self.lo, self.hi, self.resolution)

    def check_inside(self, domain) -> None:
        if self.lo < domain[0] or self.hi > domain[1]:
            raise ValueError(f"region [{self.lo}, {self.hi}] is not inside {tuple(domain)}")


def actuator_coefficients(act: Actuator, basis: SpectralBasis) -> np.ndarray:
    """Coefficients ``(p_D g, xi_i)`` of an actuator on every flattened mode."""
    act.check_inside(basis.domain)
    if act.kind == "pointwise":
        return act.scale * basis.evaluate([act.sigma])[:, 0]
    if act.a2 == act.a1:
        return np.zeros(basis.size)
    if act.distribution is None and basis.kind == "dirichlet":
        lo, hi = basis.domain
        L = hi - lo
        i = np.arange(1, basis.size + 1, dtype=float)
        u1, u2 = (act.a1 - lo) / L, (act.a2 - lo) / L
        # cos(i pi u1) - cos(i pi u2) as a product, so structural zeros are exact
        prod = 2.0 * _sinpi(0.5 * i * (u1 + u2)) * _sinpi(0.5 * i * (u2 - u1))
        return act.scale * math.sqrt(2.0 * L) / (i * np.pi) * prod
    x, w = gauss_grid(act.a1, act.a2, basis.resolution)
    g = np.ones_like(x) if act.distribution is None else np.asarray(act.distribution(x), float)
    return act.scale * (basis.evaluate(x) @ (w * g))


def _as_fraction(v: float) -> Fraction:
    f = Fraction(v).limit_denominator(10**9)
    return f if float(f) == v else Fraction(v)


def certified_zero_modes(act: Actuator, basis: SpectralBasis) -> Optional[np.ndarray]:
    """Exact test of which coefficients vanish, when it is decidable.

    For the sine basis the zone coefficient is a product of two sines and a
    point value is one sine.  Each floating-point endpoint is read as the
    simplest fraction (denominator up to 1e9) that rounds to it, so ``0.3``
    means 3/10, and the zero pattern is decided in exact arithmetic.
    Returns a boolean array over modes, or ``None`` for other bases or for
    zones with a custom distribution.
    """
    if basis.kind != "dirichlet" or (act.kind == "zone" and act.distribution is not None):
        return None
    lo, hi = (_as_fraction(v) for v in basis.domain)
    L = hi - lo
    out = np.zeros(basis.size, dtype=bool)
    for m in range(1, basis.size + 1):
        if act.kind == "pointwise":
            u = (_as_fraction(act.sigma) - lo) / L
            out[m - 1] = (m * u).denominator == 1
        else:
            u1 = (_as_fraction(act.a1) - lo) / L
            u2 = (_as_fraction(act.a2) - lo) / L
            out[m - 1] = ((m * (u1 + u2) / 2).denominator == 1
                          or (m * (u2 - u1) / 2).denominator == 1)
    return out


def region_mass_matrix(region: Region, basis: SpectralBasis) -> np.ndarray:
    """Matrix ``M_ij = (xi_i, xi_j)_{L2(omega)}``; the identity when ``omega`` is the domain."""
    region.check_inside(basis.domain)
    x, w = region.grid()
    E = basis.evaluate(x)
    M = (E * w) @ E.T
    return 0.5 * (M + M.T)


def restrict(coef, region: Region, basis: SpectralBasis):
    """Samples of ``sum_i c_i xi_i`` on the quadrature grid of ``omega``.

    Returns ``(x, values)``.
    """
    x, _ = region.grid()
    return x, basis.synthesize(coef, x)


def extend_by_zero(values, region: Region, basis: SpectralBasis) -> np.ndarray:
    """Coefficients ``(p_omega^* z, xi_i)`` of a function given on ``omega`` only.

    ``values`` is either a callable of ``x`` or the samples on the grid
    returned by :func:`restrict` / :meth:`Region.grid`.
    """
    region.check_inside(basis.domain)
    x, w = region.grid()
    f = values(x) if callable(values) else values
    f = np.asarray(f, dtype=float)
    if f.shape != x.shape:
        raise ValueError(f"expected {x.size} samples on the region grid, got shape {f.shape}")
    return basis.evaluate(x) @ (w * f)


@dataclass(frozen=True, eq=False)
class OmegaBasis:
    """An orthonormal basis ``eta_k`` of a finite-dimensional subspace of ``L2(omega)``.

    Attributes
    ----------
    region : Region
    kind : str
        ``"sine"`` or ``"restricted"``.
    values : ndarray
        ``eta_k`` on the region grid, shape ``(n, len(grid))``.
    R : ndarray
        ``R[k, i] = (eta_k, xi_i)_omega``; ``R.T @ g`` gives the global
        coefficients of ``p_omega^* g`` for ``g = sum_k g_k eta_k``.
    """

    region: Region
    kind: str
    values: np.ndarray
    R: np.ndarray

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    def project(self, samples) -> np.ndarray:
        """Coordinates ``(eta_k, f)_omega`` of samples on the region grid."""
        _, w = self.region.grid()
        return self.values @ (w * np.asarray(samples, dtype=float))

    def synthesize(self, g) -> np.ndarray:
        """Samples of ``sum_k g_k eta_k`` on the region grid."""
        return np.asarray(g, dtype=float) @ self.values


def omega_basis(region: Region, basis: SpectralBasis, kind: str = "sine",
                n: Optional[int] = None, cutoff: float = 1e-13) -> OmegaBasis:
    """Orthonormal coordinates on ``omega``.

    ``kind="sine"`` uses the Dirichlet sines native to ``omega``; by default
    as many as ``omega`` gets of the global resolution,
    ``round(size * |omega| / |Omega|)``.  On the whole domain with the sine
    basis this reproduces the global modes.

    ``kind="restricted"`` orthonormalises the restrictions ``xi_i|omega``
    through the eigen-decomposition of the mass matrix, discarding directions
    with mass below ``cutoff`` times the largest.  Every ``p_omega`` of a
    truncated state lies in this span.
    """
    region.check_inside(basis.domain)
    x, w = region.grid()
    Xi = basis.evaluate(x)
    lo, hi = basis.domain
    if kind == "sine":
        if n is None:
            n = max(1, round(basis.size * region.measure / (hi - lo)))
        k = np.arange(1, int(n) + 1, dtype=float)
        L = region.measure
        eta = math.sqrt(2.0 / L) * _sinpi(k[:, None] * ((x - region.lo) / L)[None, :])
    elif kind == "restricted":
        M = (Xi * w) @ Xi.T
        M = 0.5 * (M + M.T)
        if np.allclose(M, np.eye(basis.size), rtol=0.0, atol=1e-12):
            C = np.eye(basis.size)
        else:
            mu, V = np.linalg.eigh(M)
            order = np.argsort(mu)[::-1]
            mu, V = mu[order], V[:, order]
            keep = mu > cutoff * mu[0]
            C = (V[:, keep] / np.sqrt(mu[keep])).T
        if n is not None:
            C = C[: int(n)]
        eta = C @ Xi
    else:
        raise ValueError(f"unknown omega basis kind {kind!r}")
    R = (eta * w) @ Xi.T
    return OmegaBasis(region, kind, eta, R)

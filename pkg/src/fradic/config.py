"""Scenario files: one TOML document per scenario.

Layout::

    name = "example51-regional"
    [system]     alpha, b, N, domain, basis, z0, initial_kind
    [[actuators]] kind = "zone" (a1, a2) | "pointwise" (sigma); label, scale
    [region]     lo, hi
    [target]     kind = "zero" | "expression" | "samples" | "coefficients"
    [control]    kind = "zero" | "constant" | "expression" | "samples"
    [solver]     eps, eps_scale, method, omega_kind, n_omega, ...
    [output]     directory, formats

Every block is validated before anything is computed and unknown keys are
rejected.  :func:`dumps` writes a config back out so that ``loads(dumps(c))``
equals ``c``.
"""
from __future__ import annotations

import ast
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from fradic.dynamics import CLASSICAL_LIMIT, WEIGHTED_RL, ControlSignal, FractionalSystem
from fradic.spectral import (
    Actuator,
    Region,
    SpectralBasis,
    dirichlet_laplacian_basis,
    periodic_laplacian_basis,
)

__all__ = [
    "ConfigError",
    "SystemConfig",
    "ActuatorConfig",
    "RegionConfig",
    "TargetConfig",
    "ControlConfig",
    "SolverConfig",
    "OutputConfig",
    "ScenarioConfig",
    "load",
    "loads",
    "dumps",
    "evaluate_expression",
]


class ConfigError(ValueError):
    """Invalid scenario file."""


# -- expressions ---------------------------------------------------------------

_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log,
    "sqrt": np.sqrt, "abs": np.abs, "tanh": np.tanh, "sinh": np.sinh, "cosh": np.cosh,
    "arctan": np.arctan, "minimum": np.minimum, "maximum": np.maximum,
    "where": np.where, "heaviside": np.heaviside,
}
_CONSTS = {"pi": math.pi, "e": math.e}
_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.Mod)
_CMPOPS = (ast.Lt, ast.LtE, ast.Gt, ast.GtE)


def _check_node(node, variables):
    if isinstance(node, ast.Expression):
        return _check_node(node.body, variables)
    if isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
            raise ConfigError(f"unsupported constant {node.value!r}")
    elif isinstance(node, ast.Name):
        if node.id not in variables and node.id not in _CONSTS:
            raise ConfigError(f"unknown name {node.id!r}")
    elif isinstance(node, ast.BinOp) and isinstance(node.op, _BINOPS):
        _check_node(node.left, variables)
        _check_node(node.right, variables)
    elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        _check_node(node.operand, variables)
    elif isinstance(node, ast.Compare) and all(isinstance(o, _CMPOPS) for o in node.ops):
        _check_node(node.left, variables)
        for c in node.comparators:
            _check_node(c, variables)
    elif isinstance(node, ast.Call) and isinstance(node.func, ast.Name) \
            and node.func.id in _FUNCS and not node.keywords:
        for a in node.args:
            _check_node(a, variables)
    else:
        raise ConfigError(f"unsupported syntax in expression: {ast.dump(node)[:60]}")


def _compile(expr: str, variable: str):
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {expr!r}: {exc.msg}") from None
    _check_node(tree, {variable})
    return compile(tree, "<expression>", "eval")


def evaluate_expression(expr: str, variable: str, values) -> np.ndarray:
    """Evaluate an arithmetic expression in one variable on an array.

    Only numbers, ``+ - * / ** %``, comparisons, ``pi``, ``e`` and a fixed set
    of numpy functions (``sin``, ``exp``, ``where``, ...) are accepted.
    """
    code = _compile(expr, variable)
    v = np.asarray(values, dtype=float)
    env = {"__builtins__": {}, **_FUNCS, **_CONSTS, variable: v}
    out = np.asarray(eval(code, env), dtype=float)
    return np.broadcast_to(out, v.shape).copy()


# -- blocks ----------------------------------------------------------------------


def _take(block: dict, cls, where: str) -> dict:
    if not isinstance(block, dict):
        raise ConfigError(f"[{where}] must be a table")
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(block) - names)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(unknown)}")
    return dict(block)


def _finite(v, name):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{name} must be a finite number, got {v!r}")
    return float(v)


def _pos_int(v, name):
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ConfigError(f"{name} must be a positive integer, got {v!r}")
    return v


def _floats(v, name):
    if not isinstance(v, list):
        raise ConfigError(f"{name} must be a list of numbers")
    return [_finite(x, name) for x in v]


def _choice(v, options, name):
    if v not in options:
        raise ConfigError(f"{name} must be one of {', '.join(options)}, got {v!r}")
    return v


@dataclass(frozen=True)
class SystemConfig:
    alpha: float
    b: float = 1.0
    N: int = 32
    domain: list = field(default_factory=lambda: [0.0, 1.0])
    basis: str = "dirichlet"
    z0: list = field(default_factory=list)
    initial_kind: str = WEIGHTED_RL

    def __post_init__(self):
        a = _finite(self.alpha, "system.alpha")
        if not 0.0 < a <= 1.0:
            raise ConfigError(f"system.alpha must lie in (0, 1], got {a}")
        if not _finite(self.b, "system.b") > 0:
            raise ConfigError(f"system.b must be positive, got {self.b}")
        _pos_int(self.N, "system.N")
        dom = _floats(self.domain, "system.domain")
        if len(dom) != 2 or not dom[0] < dom[1]:
            raise ConfigError(f"system.domain must be [lo, hi] with lo < hi, got {dom}")
        _choice(self.basis, ("dirichlet", "periodic"), "system.basis")
        _floats(self.z0, "system.z0")
        _choice(self.initial_kind, (WEIGHTED_RL, CLASSICAL_LIMIT), "system.initial_kind")


@dataclass(frozen=True)
class ActuatorConfig:
    kind: str
    a1: Optional[float] = None
    a2: Optional[float] = None
    sigma: Optional[float] = None
    label: str = ""
    scale: float = 1.0

    def __post_init__(self):
        _choice(self.kind, ("zone", "pointwise"), "actuators.kind")
        _finite(self.scale, "actuators.scale")
        if self.kind == "zone":
            if self.a1 is None or self.a2 is None or self.sigma is not None:
                raise ConfigError("a zone actuator takes a1 and a2 (and no sigma)")
            if not _finite(self.a1, "a1") < _finite(self.a2, "a2"):
                raise ConfigError(f"zone needs a1 < a2, got [{self.a1}, {self.a2}]")
        else:
            if self.sigma is None or self.a1 is not None or self.a2 is not None:
                raise ConfigError("a pointwise actuator takes sigma (and no a1, a2)")
            _finite(self.sigma, "sigma")

    def build(self) -> Actuator:
        if self.kind == "zone":
            return Actuator.zone(self.a1, self.a2, label=self.label, scale=self.scale)
        return Actuator.pointwise(self.sigma, label=self.label, scale=self.scale)


@dataclass(frozen=True)
class RegionConfig:
    lo: float
    hi: float

    def __post_init__(self):
        if not _finite(self.lo, "region.lo") < _finite(self.hi, "region.hi"):
            raise ConfigError(f"region needs lo < hi, got [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class TargetConfig:
    """``z_b``: an expression in ``x``, a two-column CSV file (x, value) or
    global coefficients."""

    kind: str = "zero"
    expression: str = ""
    file: str = ""
    coefficients: list = field(default_factory=list)

    def __post_init__(self):
        _choice(self.kind, ("zero", "expression", "samples", "coefficients"), "target.kind")
        if self.kind == "expression":
            _compile(self.expression, "x")
        if self.kind == "samples" and not self.file:
            raise ConfigError("target.kind = 'samples' needs target.file")
        if self.kind == "coefficients":
            if not self.coefficients:
                raise ConfigError("target.kind = 'coefficients' needs target.coefficients")
            _floats(self.coefficients, "target.coefficients")


@dataclass(frozen=True)
class ControlConfig:
    """Control for ``simulate``: expressions in ``t`` (one per actuator),
    constants, or a CSV file with columns t, u1, ..., up."""

    kind: str = "zero"
    values: list = field(default_factory=list)
    expressions: list = field(default_factory=list)
    file: str = ""

    def __post_init__(self):
        _choice(self.kind, ("zero", "constant", "expression", "samples"), "control.kind")
        if self.kind == "constant":
            _floats(self.values, "control.values")
        if self.kind == "expression":
            if not self.expressions:
                raise ConfigError("control.kind = 'expression' needs control.expressions")
            for e in self.expressions:
                _compile(e, "t")
        if self.kind == "samples" and not self.file:
            raise ConfigError("control.kind = 'samples' needs control.file")


@dataclass(frozen=True)
class SolverConfig:
    """Numerical settings.

    ``eps`` overrides ``eps_scale * trace(W) / n`` when given (a negative
    value means unset).  ``nodes_per_panel`` is the time-rule order,
    ``resolution`` the spatial nodes per unit length, ``grid_size`` the number
    of control samples, ``space_points``/``time_points`` the simulate grid.
    """

    eps: float = -1.0
    eps_scale: float = 1e-10
    method: str = "direct"
    truncation_rtol: float = 1e-13
    omega_kind: str = "restricted"
    n_omega: int = 0
    psi_kind: str = CLASSICAL_LIMIT
    tolerance: float = 1e-3
    nodes_per_panel: int = 16
    resolution: int = 256
    grid_size: int = 200
    space_points: int = 101
    time_points: int = 11

    def __post_init__(self):
        _finite(self.eps, "solver.eps")
        if not _finite(self.eps_scale, "solver.eps_scale") >= 0:
            raise ConfigError("solver.eps_scale must be >= 0")
        _choice(self.method, ("direct", "truncated-spectrum"), "solver.method")
        _finite(self.truncation_rtol, "solver.truncation_rtol")
        _choice(self.omega_kind, ("restricted", "sine"), "solver.omega_kind")
        if isinstance(self.n_omega, bool) or not isinstance(self.n_omega, int) \
                or self.n_omega < 0:
            raise ConfigError("solver.n_omega must be a non-negative integer (0 = automatic)")
        _choice(self.psi_kind, (WEIGHTED_RL, CLASSICAL_LIMIT), "solver.psi_kind")
        if not _finite(self.tolerance, "solver.tolerance") > 0:
            raise ConfigError("solver.tolerance must be positive")
        for name in ("nodes_per_panel", "resolution", "space_points"):
            _pos_int(getattr(self, name), f"solver.{name}")
        for name in ("grid_size", "time_points"):
            if _pos_int(getattr(self, name), f"solver.{name}") < 2:
                raise ConfigError(f"solver.{name} must be at least 2")


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    formats: list = field(default_factory=lambda: ["csv", "md"])

    def __post_init__(self):
        if not isinstance(self.formats, list):
            raise ConfigError("output.formats must be a list")
        for f in self.formats:
            _choice(f, ("csv", "md"), "output.formats")


@dataclass(frozen=True)
class ScenarioConfig:
    """A complete scenario.  ``base`` is the directory relative file paths
    resolve against (not serialised)."""

    name: str
    system: SystemConfig
    actuators: tuple
    region: Optional[RegionConfig] = None
    target: TargetConfig = TargetConfig()
    control: ControlConfig = ControlConfig()
    solver: SolverConfig = SolverConfig()
    output: OutputConfig = OutputConfig()
    description: str = ""
    seed: int = 0
    base: str = field(default=".", compare=False)

    def __post_init__(self):
        if not self.actuators:
            raise ConfigError("at least one [[actuators]] entry is required")
        lo, hi = self.system.domain
        for a in self.actuators:
            pts = (a.a1, a.a2) if a.kind == "zone" else (a.sigma,)
            if any(not lo <= v <= hi for v in pts):
                raise ConfigError(f"actuator {a.label or a.kind} leaves the domain [{lo}, {hi}]")
        if self.region is not None and not (lo <= self.region.lo and self.region.hi <= hi):
            raise ConfigError(f"region [{self.region.lo}, {self.region.hi}] leaves the domain")
        if len(self.system.z0) > self.basis_size():
            raise ConfigError(f"system.z0 has more than {self.basis_size()} coefficients")
        if len(self.target.coefficients) > self.basis_size():
            raise ConfigError(f"target.coefficients has more than {self.basis_size()} entries")
        if self.control.kind == "constant" and len(self.control.values) != len(self.actuators):
            raise ConfigError("control.values needs one entry per actuator")
        if self.control.kind == "expression" \
                and len(self.control.expressions) != len(self.actuators):
            raise ConfigError("control.expressions needs one entry per actuator")

    # -- builders --------------------------------------------------------------

    def basis_size(self) -> int:
        return self.system.N * (2 if self.system.basis == "periodic" else 1)

    def with_overrides(self, modes: Optional[int] = None, eps: Optional[float] = None):
        """Copy with the truncation level and/or the Tikhonov shift replaced."""
        d = self.to_dict()
        if modes is not None:
            d["system"]["N"] = modes
        if eps is not None:
            d["solver"]["eps"] = eps
        return from_dict(d, self.base)

    def build_basis(self) -> SpectralBasis:
        s = self.system
        make = dirichlet_laplacian_basis if s.basis == "dirichlet" else periodic_laplacian_basis
        return make(s.N, tuple(s.domain), self.solver.resolution)

    def build_actuators(self) -> list:
        return [a.build() for a in self.actuators]

    def build_system(self, basis: Optional[SpectralBasis] = None) -> FractionalSystem:
        basis = self.build_basis() if basis is None else basis
        z0 = np.zeros(basis.size)
        z0[:len(self.system.z0)] = self.system.z0
        return FractionalSystem(self.system.alpha, self.system.b, basis,
                                self.build_actuators(), z0, self.system.initial_kind,
                                self.solver.nodes_per_panel)

    def build_region(self) -> Region:
        if self.region is None:
            lo, hi = self.system.domain
            return Region(lo, hi, self.solver.resolution)
        return Region(self.region.lo, self.region.hi, self.solver.resolution)

    def _path(self, name: str) -> Path:
        p = Path(name)
        return p if p.is_absolute() else Path(self.base) / p

    def target_spec(self, size: int) -> dict:
        """Keyword arguments describing ``z_b`` for :class:`fradic.hum.HumProblem`."""
        t = self.target
        if t.kind == "zero":
            return {"target": None}
        if t.kind == "coefficients":
            c = np.zeros(size)
            c[:len(t.coefficients)] = t.coefficients
            return {"target_coefficients": c}
        if t.kind == "expression":
            expr = t.expression
            return {"target": lambda x: evaluate_expression(expr, "x", x)}
        data = np.loadtxt(self._path(t.file), delimiter=",", ndmin=2, comments="#")
        if data.shape[1] != 2 or np.any(np.diff(data[:, 0]) <= 0):
            raise ConfigError(f"{t.file}: expected increasing x and one value column")
        xs, vs = data[:, 0], data[:, 1]
        return {"target": lambda x: np.interp(x, xs, vs)}

    def build_control(self) -> ControlSignal:
        c, p = self.control, len(self.actuators)
        if c.kind == "zero":
            return ControlSignal.zero(p)
        if c.kind == "constant":
            return ControlSignal.constant(c.values)
        if c.kind == "expression":
            exprs = list(c.expressions)
            return ControlSignal.from_function(
                lambda s: np.vstack([evaluate_expression(e, "t", s) for e in exprs]), p)
        data = np.loadtxt(self._path(c.file), delimiter=",", ndmin=2, comments="#")
        if data.shape[1] != p + 1:
            raise ConfigError(f"{c.file}: expected columns t, u1..u{p}")
        return ControlSignal.sampled(data[:, 0], data[:, 1:].T)

    # -- serialisation -----------------------------------------------------------

    def to_dict(self) -> dict:
        d = {"name": self.name}
        if self.description:
            d["description"] = self.description
        d["seed"] = self.seed
        d["system"] = asdict(self.system)
        d["actuators"] = [{k: v for k, v in asdict(a).items() if v is not None}
                          for a in self.actuators]
        if self.region is not None:
            d["region"] = asdict(self.region)
        for name in ("target", "control", "solver", "output"):
            d[name] = asdict(getattr(self, name))
        return d


_TOP = {"name", "description", "seed", "system", "actuators", "region", "target",
        "control", "solver", "output"}


def from_dict(data: dict, base: str = ".") -> ScenarioConfig:
    """Build and validate a scenario from parsed TOML."""
    unknown = sorted(set(data) - _TOP)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    for key in ("name", "system", "actuators"):
        if key not in data:
            raise ConfigError(f"missing required key {key!r}")
    if not isinstance(data["name"], str) or not data["name"]:
        raise ConfigError("name must be a non-empty string")
    seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    acts = data["actuators"]
    if not isinstance(acts, list):
        raise ConfigError("actuators must be an array of tables ([[actuators]])")
    try:
        system = SystemConfig(**_take(data["system"], SystemConfig, "system"))
        actuators = tuple(ActuatorConfig(**_take(a, ActuatorConfig, "actuators"))
                          for a in acts)
        region = (RegionConfig(**_take(data["region"], RegionConfig, "region"))
                  if "region" in data else None)
        blocks = {}
        for name, cls in (("target", TargetConfig), ("control", ControlConfig),
                          ("solver", SolverConfig), ("output", OutputConfig)):
            blocks[name] = cls(**_take(data.get(name, {}), cls, name))
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return ScenarioConfig(data["name"], system, actuators, region,
                          description=data.get("description", ""), seed=seed,
                          base=str(base), **blocks)


def loads(text: str, base: str = ".") -> ScenarioConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed TOML: {exc}") from None
    return from_dict(data, base)


def load(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return loads(text, str(path.parent))


def dumps(cfg: ScenarioConfig) -> str:
    return tomli_w.dumps(cfg.to_dict())

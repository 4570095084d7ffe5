"""``fradic`` command line: simulate, strategic, gramian and hum.

Exit codes: 0 success, 2 negative verdict (not strategic, Gramian not
positive definite, steering not converged), 3 unsupported parameter
(``alpha <= 1/2`` for Gramian or HUM requests), 1 anything else.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from fradic import __version__
from fradic.config import ConfigError, ScenarioConfig, load
from fradic.controllability import GramianIntegrabilityError, build_gramian, strategic_test
from fradic.dynamics import CLASSICAL_LIMIT, mild_solution
from fradic.hum import HumProblem, SingularGramianError, solve

log = logging.getLogger("fradic")

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE, EXIT_UNSUPPORTED = 0, 1, 2, 3

SCENARIO_DIR = Path(__file__).with_name("scenarios")


def fmt(v) -> str:
    """Floats with 17 significant digits, so values survive a round trip."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def resolve_config(name: str) -> Path:
    """A path, or the name of a bundled scenario (with or without ``.toml``)."""
    p = Path(name)
    if p.exists():
        return p
    for cand in (SCENARIO_DIR / name, SCENARIO_DIR / f"{name}.toml"):
        if cand.exists():
            return cand
    raise ConfigError(f"no such config file or bundled scenario: {name}")


def bundled_scenarios() -> list:
    return sorted(p.stem for p in SCENARIO_DIR.glob("*.toml"))


class _Run:
    def __init__(self, cfg: ScenarioConfig, out: Path):
        self.cfg = cfg
        self.out = out
        out.mkdir(parents=True, exist_ok=True)
        self.csv = "csv" in cfg.output.formats
        self.md = "md" in cfg.output.formats

    def table(self, name, header, rows):
        if self.csv:
            write_csv(self.out / name, header, rows)

    def report(self, name, lines):
        if self.md:
            (self.out / name).write_text("\n".join(lines) + "\n", encoding="utf-8")


# -- commands --------------------------------------------------------------------


def cmd_simulate(cfg: ScenarioConfig, out: Path) -> int:
    """State snapshots ``z(x, t_k)`` under the configured control."""
    run = _Run(cfg, out)
    sys_ = cfg.build_system()
    u = cfg.build_control()
    s = cfg.solver
    b = sys_.b
    times = np.linspace(0.0, b, s.time_points)
    # weighted initial data blow up at t = 0; start the snapshots after it
    if sys_.alpha < 1.0 and sys_.initial_kind != CLASSICAL_LIMIT and np.any(sys_.z0):
        times = times[1:]
    lo, hi = cfg.system.domain
    x = np.linspace(lo, hi, s.space_points)
    coefs = np.column_stack([sys_.z0.copy() if t == 0.0 else mild_solution(sys_, u, t)
                             for t in times])
    Z = sys_.basis.synthesize(coefs.T, x).T
    run.table("z.csv", ["x"] + [f"t={fmt(t)}" for t in times],
              (np.concatenate(([xi], row)) for xi, row in zip(x, Z)))
    run.table("coefficients.csv", ["mode", "lambda"] + [f"t={fmt(t)}" for t in times],
              ([k + 1, lam] + list(c) for k, (lam, c) in
               enumerate(zip(sys_.basis.mode_lambdas, coefs))))
    run.report("simulate.md", [
        f"# {cfg.name}: simulation",
        "",
        f"alpha = {fmt(sys_.alpha)}, b = {fmt(b)}, modes = {sys_.basis.size}, "
        f"actuators = {sys_.p}, control = {cfg.control.kind}",
        f"snapshots: {times.size} times x {x.size} points",
        f"max |z| at t = b: {fmt(np.max(np.abs(Z[:, -1])))}",
    ])
    print(f"simulated {times.size} snapshots into {out}")
    return EXIT_OK


def cmd_strategic(cfg: ScenarioConfig, out: Path) -> int:
    """Rank test ``rank G_j = r_j`` over the retained modes."""
    run = _Run(cfg, out)
    basis = cfg.build_basis()
    region = cfg.build_region() if cfg.region is not None else None
    rep = strategic_test(cfg.build_actuators(), basis, region=region)
    rows = []
    for j, (G, rank) in enumerate(zip(rep.matrices, rep.ranks), start=1):
        sv = np.linalg.svd(G, compute_uv=False)
        rj = int(basis.multiplicities[j - 1])
        rows.append([j, basis.eigenvalues[j - 1], rj, rank,
                     sv.max() if sv.size else 0.0, sv.min() if sv.size else 0.0,
                     rank >= rj])
    run.table("strategic.csv", ["j", "lambda", "r_j", "rank", "sigma_max", "sigma_min", "ok"],
              rows)
    run.report("strategic.md", [f"# {cfg.name}: strategic test", "", rep.summary()])
    print(rep.summary())
    return EXIT_OK if rep.strategic else EXIT_NEGATIVE


def cmd_gramian(cfg: ScenarioConfig, out: Path) -> int:
    """Regional Gramian on the native sine coordinates of omega."""
    run = _Run(cfg, out)
    sys_ = cfg.build_system()
    n = cfg.solver.n_omega or None
    rep = build_gramian(sys_, cfg.build_region(), "sine", n)
    run.table("gramian.csv", [f"c{k + 1}" for k in range(rep.n_omega)], rep.W)
    run.table("eigenvalues.csv", ["k", "eigenvalue"],
              ([k + 1, v] for k, v in enumerate(rep.eigenvalues)))
    verdict = "positive definite" if rep.positive_definite else "not positive definite"
    lines = [
        f"Gramian on omega = [{fmt(rep.omega.region.lo)}, {fmt(rep.omega.region.hi)}] "
        f"with {rep.n_omega} coordinates (N = {rep.N}, b = {fmt(rep.b)}): {verdict}",
        f"smallest eigenvalue {rep.min_eigenvalue:.6e}, tolerance {rep.tau_pd:.6e}",
        f"largest eigenvalue {rep.eigenvalues[-1]:.6e}, condition number "
        f"{rep.condition_number:.6e}",
    ]
    run.report("gramian.md", [f"# {cfg.name}: Gramian", ""] + lines)
    print("\n".join(lines))
    return EXIT_OK if rep.positive_definite else EXIT_NEGATIVE


def cmd_hum(cfg: ScenarioConfig, out: Path) -> int:
    """Minimum-energy control steering the state to the target on omega."""
    run = _Run(cfg, out)
    sys_ = cfg.build_system()
    s = cfg.solver
    prob = HumProblem(
        sys_, cfg.build_region(), eps=s.eps if s.eps >= 0 else None,
        eps_scale=s.eps_scale, solver=s.method, truncation_rtol=s.truncation_rtol,
        omega_kind=s.omega_kind, n_omega=s.n_omega or None, psi_kind=s.psi_kind,
        grid_size=s.grid_size, tolerance=s.tolerance, **cfg.target_spec(sys_.basis.size))
    sol = solve(prob)
    labels = [a.label or f"u{k + 1}" for k, a in enumerate(cfg.actuators)]
    run.table("u_star.csv", ["t"] + labels,
              (np.concatenate(([t], c)) for t, c in zip(sol.times, sol.controls.T)))
    run.table("g.csv", ["x", "g"], zip(sol.x, sol.g_values()))
    run.table("g_coefficients.csv", ["k", "g"], ([k + 1, v] for k, v in enumerate(sol.g)))
    run.table("h.csv", ["mode", "h"], ([k + 1, v] for k, v in enumerate(sol.h)))
    run.table("profile.csv", ["x", "reached", "target"], zip(sol.x, sol.reached, sol.target))
    summary = [
        ("energy", sol.energy), ("gram_energy", sol.gram_energy),
        ("residual", sol.residual), ("target_norm", sol.target_norm),
        ("relative_residual", sol.relative_residual), ("raw_residual", sol.raw_residual),
        ("condition_number", sol.condition_number),
        ("regularized_condition_number", sol.regularized_condition_number), ("eps", sol.eps),
        ("n_omega", sol.omega.n), ("converged", sol.converged),
    ]
    run.table("summary.csv", ["quantity", "value"], summary)
    text = [f"{k}: {fmt(v)}" for k, v in summary]
    run.report("summary.md", [f"# {cfg.name}: HUM", ""] + [f"- {t}" for t in text])
    print("\n".join(text))
    return EXIT_OK if sol.converged else EXIT_NEGATIVE


COMMANDS = {
    "simulate": cmd_simulate,
    "strategic": cmd_strategic,
    "gramian": cmd_gramian,
    "hum": cmd_hum,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fradic",
        description="Regional controllability of time-fractional diffusion systems.")
    ap.add_argument("--version", action="version", version=f"fradic {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__.splitlines()[0])
        p.add_argument("--config", required=True,
                       help="scenario file, or the name of a bundled scenario "
                            f"({', '.join(bundled_scenarios())})")
        p.add_argument("--out", help="output directory (default: output.directory)")
        p.add_argument("--modes", type=int, help="override the truncation level N")
        p.add_argument("--eps", type=float, help="override the Tikhonov shift")
        p.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load(resolve_config(args.config))
        if args.eps is not None and args.eps < 0:
            raise ConfigError("--eps must be >= 0")
        cfg = cfg.with_overrides(args.modes, args.eps)
        out = Path(args.out if args.out else cfg.output.directory)
        log.info("running %s on %s into %s", args.command, cfg.name, out)
        return COMMANDS[args.command](cfg, out)
    except GramianIntegrabilityError as exc:
        print(f"fradic: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (ConfigError, SingularGramianError, ValueError, OSError) as exc:
        print(f"fradic: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

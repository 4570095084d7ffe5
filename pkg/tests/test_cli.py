import csv
import os
import shutil
import subprocess
import sys

import numpy as np
import pytest

from oracles import ml_alpha_neg

from fradic import __version__, cli
from fradic.dynamics import adjoint_state_phi
from fradic.spectral import dirichlet_laplacian_basis


def run(tmp_path, command, config, *extra):
    out = tmp_path / f"{command}-{config}"
    code = cli.main([command, "--config", config, "--out", str(out), *extra])
    return code, out


def read(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=object)


def numbers(path):
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def test_fmt_is_round_trip_safe():
    assert cli.fmt(0.1) == "0.10000000000000001"
    assert float(cli.fmt(1 / 3)) == 1 / 3
    assert cli.fmt(True) == "true" and cli.fmt(np.bool_(False)) == "false"
    assert cli.fmt(np.int64(7)) == "7" and cli.fmt("a") == "a"


def test_simulate_zero_control_is_zero(tmp_path):
    cfg = tmp_path / "zero.toml"
    cfg.write_text((cli.SCENARIO_DIR / "example51-whole.toml").read_text())
    code, out = run(tmp_path, "simulate", str(cfg))
    assert code == 0
    head, _ = read(out / "z.csv")
    assert head[0] == "x" and head[1] == "t=0"
    assert not numbers(out / "z.csv")[:, 1:].any()
    assert (out / "simulate.md").exists()


def test_simulate_free_decay_against_oracle(tmp_path):
    code, out = run(tmp_path, "simulate", "example51-free-decay")
    assert code == 0
    head, _ = read(out / "coefficients.csv")
    data = numbers(out / "coefficients.csv")
    times = np.array([float(h[2:]) for h in head[2:]])
    np.testing.assert_allclose(times, [0.0, 0.25, 0.5, 0.75, 1.0])
    assert not data[1:, 2:].any()
    ref = [ml_alpha_neg(np.pi**2 * t**0.75, 0.75) if t else 1.0 for t in times]
    np.testing.assert_allclose(data[0, 2:], ref, rtol=1e-11)
    z = numbers(out / "z.csv")
    xi1 = np.sqrt(2) * np.sin(np.pi * z[:, 0])
    np.testing.assert_allclose(z[:, 1:], np.outer(xi1, ref), atol=1e-14)


def test_weighted_initial_data_skip_t0(tmp_path):
    cfg = tmp_path / "rl.toml"
    text = (cli.SCENARIO_DIR / "example51-free-decay.toml").read_text()
    cfg.write_text(text.replace('"classical-limit"', '"weighted-rl"'))
    code, out = run(tmp_path, "simulate", str(cfg))
    head, _ = read(out / "z.csv")
    assert code == 0 and head[1] == "t=0.25" and len(head) == 5


def test_strategic_verdicts(tmp_path, capsys):
    code, out = run(tmp_path, "strategic", "example51-whole")
    assert code == 2
    head, raw = read(out / "strategic.csv")
    assert head == ["j", "lambda", "r_j", "rank", "sigma_max", "sigma_min", "ok"]
    assert [int(r[0]) for r in raw if r[6] == "false"] == [4, 8, 12, 16]
    assert all(r[3] == "0" for r in raw if r[6] == "false")
    assert "mode 4: rank G_j = 0 < r_j = 1" in capsys.readouterr().out
    assert run(tmp_path, "strategic", "example51-irrational-zone")[0] == 0
    code, out = run(tmp_path, "strategic", "periodic-one-actuator")
    assert code == 2 and "p<r" in (out / "strategic.md").read_text()


def test_gramian(tmp_path):
    code, out = run(tmp_path, "gramian", "example51-regional")
    assert code == 0
    W = numbers(out / "gramian.csv")
    np.testing.assert_array_equal(W, W.T)
    ev = numbers(out / "eigenvalues.csv")
    np.testing.assert_allclose(ev[:, 1], np.linalg.eigvalsh(W), rtol=1e-10)
    assert "positive definite" in (out / "gramian.md").read_text()
    assert run(tmp_path, "gramian", "example51-whole")[0] == 2


def summary(out):
    return {k: v for k, v in read(out / "summary.csv")[1]}


def test_hum_regional(tmp_path):
    code, out = run(tmp_path, "hum", "example51-regional")
    assert code == 0
    s = summary(out)
    assert float(s["relative_residual"]) <= 1e-3 and s["converged"] == "true"
    prof = numbers(out / "profile.csv")
    res = prof[:, 1] - prof[:, 2]
    assert np.max(np.abs(res)) < 1e-2 * np.max(np.abs(prof[:, 2]))
    u = numbers(out / "u_star.csv")
    assert u.shape == (200, 2) and u[0, 0] == 0.0
    assert numbers(out / "g.csv").shape[1] == 2
    assert numbers(out / "h.csv").shape == (16, 2)


def test_hum_pointwise_control_is_phi(tmp_path):
    code, out = run(tmp_path, "hum", "example52-pointwise")
    assert code == 0
    u = numbers(out / "u_star.csv")
    h = numbers(out / "h.csv")[:, 1]
    from fradic.config import load
    sys_ = load(cli.SCENARIO_DIR / "example52-pointwise.toml").build_system()
    phi = adjoint_state_phi(sys_, h, u[:, 0])
    ref = sys_.basis.synthesize(phi.T, [0.18169011381620932])[:, 0]
    # the last samples sit 1e-6 b from the singular endpoint, where the modal sum cancels
    np.testing.assert_allclose(u[:, 1], ref, rtol=1e-9)


def test_hum_unreachable_and_zero_targets(tmp_path):
    code, out = run(tmp_path, "hum", "example51-whole")
    assert code == 2 and summary(out)["converged"] == "false"
    cfg = tmp_path / "zero.toml"
    text = (cli.SCENARIO_DIR / "example51-regional.toml").read_text()
    cfg.write_text(text.replace('kind = "expression"\nexpression = "exp(-((x - 0.5) / 0.15)**2)"',
                                'kind = "zero"'))
    code, out = run(tmp_path, "hum", str(cfg))
    assert code == 0
    for name in ("u_star.csv", "g.csv", "h.csv"):
        assert not numbers(out / name)[:, 1:].any()
    assert float(summary(out)["energy"]) == 0.0


def test_outputs_are_deterministic(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    for d in (a, b):
        assert cli.main(["hum", "--config", "example51-regional", "--out", str(d)]) == 0
    for f in sorted(a.iterdir()):
        assert f.read_bytes() == (b / f.name).read_bytes(), f.name


def test_overrides(tmp_path):
    code, out = run(tmp_path, "gramian", "example51-regional", "--modes", "3")
    assert code == 0 and numbers(out / "gramian.csv").shape == (2, 2)
    # three modes cannot resolve the bump: a negative verdict, not an error
    code, out = run(tmp_path, "hum", "example51-regional", "--modes", "3")
    assert code == 2 and numbers(out / "h.csv").shape == (3, 2)
    code, out = run(tmp_path, "hum", "example51-regional", "--eps", "1e-3")
    assert float(summary(out)["eps"]) == 1e-3
    assert code == 2  # heavy regularisation misses the 1e-3 tolerance
    assert run(tmp_path, "hum", "example51-regional", "--eps", "-1")[0] == 1


def test_csv_only_output(tmp_path):
    cfg = tmp_path / "c.toml"
    text = (cli.SCENARIO_DIR / "heat-classical.toml").read_text()
    cfg.write_text(text + 'formats = ["csv"]\n')
    code, out = run(tmp_path, "simulate", str(cfg))
    assert code == 0 and (out / "z.csv").exists() and not (out / "simulate.md").exists()


def test_bad_inputs_exit_1(tmp_path, capsys):
    assert run(tmp_path, "hum", "no-such-scenario")[0] == 1
    bad = tmp_path / "bad.toml"
    bad.write_text('name = "x"\n[system]\nalpha = 2.0\n[[actuators]]\nkind = "zone"\n'
                   'a1 = 0.0\na2 = 0.5\n')
    assert run(tmp_path, "simulate", str(bad))[0] == 1
    assert "system.alpha" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        cli.main(["launch", "--config", "x"])
    assert exc.value.code == 2


def test_bundled_names_resolve():
    names = cli.bundled_scenarios()
    assert "example51-regional" in names and len(names) == 7
    assert cli.resolve_config("heat-classical.toml").name == "heat-classical.toml"


@pytest.mark.skipif(shutil.which("fradic") is None, reason="console script not installed")
def test_console_script():
    out = subprocess.run(["fradic", "--version"], capture_output=True, text=True, check=True)
    assert out.stdout.strip() == f"fradic {__version__}"


def test_pure_python_backend_gives_same_files(tmp_path):
    ref = tmp_path / "ref"
    assert cli.main(["gramian", "--config", "example51-regional", "--out", str(ref)]) == 0
    env = dict(os.environ, FRADIC_PURE_PYTHON="1")
    pure = tmp_path / "pure"
    subprocess.run([sys.executable, "-m", "fradic.cli", "gramian", "--config",
                    "example51-regional", "--out", str(pure)], env=env, check=True,
                   capture_output=True)
    np.testing.assert_allclose(numbers(pure / "gramian.csv"), numbers(ref / "gramian.csv"),
                               rtol=1e-11, atol=1e-13 * np.abs(numbers(ref / "gramian.csv")).max())

import csv
import json

import numpy as np
import pytest

from rqmckde.cli import ConfigError, RunConfig, main
from rqmckde.kernel import gaussian_kernel

FAST = ["--n-min", "8", "--n-max", "10", "--nr", "4", "--ne", "32", "--ell0", "3", "--B", "0.0475"]


def bound_rows(text):
    rows = {}
    for line in text.strip().splitlines():
        *key, val = line.split()
        rows[" ".join(key)] = float(val)
    return rows


def test_bounds_strat(capsys):
    assert main(["bounds", "strat", "--s", "2", "--interval", "-2", "2", "--rf2", "0.19018"]) == 0
    assert bound_rows(capsys.readouterr().out)["nu"] == 1.0


def test_bounds_kh(capsys):
    assert main(["bounds", "kh", "--s", "3"]) == 0
    assert bound_rows(capsys.readouterr().out)["MISE exponent"] == 0.8


def test_bounds_mc(capsys):
    assert main(["bounds", "mc", "--n", "16384", "--h", "0.0442"]) == 0
    val = bound_rows(capsys.readouterr().out)["AIV (leading)"]
    assert val == pytest.approx(gaussian_kernel().mu0_sq / (16384 * 0.0442), rel=1e-5)


def test_bounds_nus_warns_and_needs_h(capsys):
    with pytest.warns(UserWarning):
        assert main(["bounds", "nus", "--n", "1024", "--h", "0.1", "--s", "2"]) == 0
    assert main(["bounds", "nus", "--n", "1024"]) == 1
    assert "--h" in capsys.readouterr().err


def test_unknown_sampler_exit_two(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--sampler", "halton", "--out", str(tmp_path)])
    assert exc.value.code == 2
    assert "unknown sampler" in capsys.readouterr().err


def test_config_parse_error_reports_line(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{\n  "model": "normal-sum",\n  "s": ,\n}\n')
    assert main(["run", "--config", str(cfg)]) == 1
    err = capsys.readouterr().err
    assert "line 3" in err


def test_config_unknown_key():
    with pytest.raises(ConfigError, match="unknown config keys"):
        RunConfig.loads('{"modle": "x"}')


def test_config_round_trip():
    cfg = RunConfig(model="option", weights="decreasing", samplers=["nus", "mc"], ell0=5.5, seed=3,
                    interval=[0.0, 20.0])
    back = RunConfig.loads(cfg.dumps())
    assert back == cfg


def run_fast(tmp_path, *extra):
    out = tmp_path / "out"
    argv = ["run", "--model", "normal-sum", "--s", "1", "--sampler", "nus", "--seed", "5",
            "--out", str(out)] + FAST + list(extra)
    return main(argv), out


def test_run_writes_artifacts_and_flags_win(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(RunConfig(model="cantilever", seed=99).dumps())
    code, out = run_fast(tmp_path, "--config", str(cfg))
    assert code == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["fit_normal-sum_s1_nus.json", "run-config.json", "surface_normal-sum_s1_nus.csv"]
    used = json.loads((out / "run-config.json").read_text())
    assert used["model"] == "normal-sum" and used["seed"] == 5 and used["ell0"] == 3.0
    with open(out / "surface_normal-sum_s1_nus.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3 * 6
    fit = json.loads((out / "fit_normal-sum_s1_nus.json").read_text())
    assert fit["B"] == 0.0475 and fit["sampler"] == "nus"
    text = capsys.readouterr().out
    assert "beta" in text and "nu~" in text


def test_run_is_byte_identical_for_fixed_seed(tmp_path):
    code1, out1 = run_fast(tmp_path / "a")
    code2, out2 = run_fast(tmp_path / "b", "--threads", "1")
    assert code1 == code2 == 0
    for p in out1.iterdir():
        if p.name == "run-config.json":
            continue
        assert p.read_bytes() == (out2 / p.name).read_bytes(), p.name


def test_density_normal(tmp_path, capsys):
    out = tmp_path / "dens"
    assert main(["density", "--model", "normal-sum", "--s", "1", "--sampler", "nus",
                 "--n", "16384", "--B", "0.0475", "--out", str(out)]) == 0
    data = np.loadtxt(out / "density_normal-sum_s1_nus.csv", delimiter=",", skiprows=1)
    assert data.shape == (512, 2)
    x, f = data.T
    assert np.all(np.diff(x) > 0) and x[0] > -2 and x[-1] < 2
    exact = np.exp(-x * x / 2) / np.sqrt(2 * np.pi)
    assert np.max(np.abs(f - exact)) < 0.01


# reference curves estimated with n = 2^19 scrambled Sobol' points (x, density)
CANTILEVER_REF = [(0.41807, 0.08558), (0.59536, 0.54208), (0.77264, 1.46852), (0.92775, 1.87338),
                  (0.94991, 1.85415), (1.1272, 1.18039), (1.30447, 0.40959), (1.48176, 0.08416)]
OPTION_REF = [(0.2713, 0.04611), (2.9843, 0.05037), (3.5269, 0.05058), (8.9529, 0.04057),
              (14.9215, 0.02012), (20.8901, 0.00665), (26.8587, 0.00156)]


def density_curve(tmp_path, model, s, n=65536):
    out = tmp_path / "dens"
    assert main(["density", "--model", model, "--sampler", "nus", "--n", str(n),
                 "--out", str(out), "--seed", "1"]) == 0
    return np.loadtxt(out / f"density_{model}_s{s}_nus.csv", delimiter=",", skiprows=1).T


def test_density_cantilever_shape(tmp_path):
    x, f = density_curve(tmp_path, "cantilever", 3)
    k = int(np.argmax(f))
    assert abs(x[k] - 0.92) < 0.03
    assert f[k] == pytest.approx(1.87, abs=0.06)
    assert np.all(np.diff(f[:k - 5]) > 0) and np.all(np.diff(f[k + 5:]) < 0)
    ref = np.array(CANTILEVER_REF)
    assert np.max(np.abs(np.interp(ref[:, 0], x, f) - ref[:, 1])) < 0.03


def test_density_option_matches_reference(tmp_path):
    x, f = density_curve(tmp_path, "option", 12)
    ref = np.array(OPTION_REF)
    assert np.max(np.abs(np.interp(ref[:, 0], x, f) - ref[:, 1])) < 0.002
    # mild rise to a mode near 3.5, then a long decreasing tail
    k = int(np.argmax(f))
    assert 2.5 < x[k] < 4.5
    assert np.all(np.diff(f[k + 5:]) < 0)


@pytest.mark.slow
def test_run_cantilever_mc_desk(tmp_path):
    out = tmp_path / "cant"
    assert main(["run", "--model", "cantilever", "--sampler", "mc", "--preset", "desk",
                 "--out", str(out)]) == 0
    assert (out / "surface_cantilever_s3_mc.csv").exists()
    assert (out / "fit_cantilever_s3_mc.json").exists()

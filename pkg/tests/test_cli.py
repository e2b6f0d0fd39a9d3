import json

import pytest
import yaml

from apshom.cli import main


def test_validate_ok(config_dir, capsys):
    rc = main(["validate", str(config_dir / "laminate_deterministic.yaml")])
    out = capsys.readouterr().out
    assert rc == 0
    assert "classification: periodic" in out


def test_validate_rejects_violation(tmp_path, config_dir, capsys):
    raw = yaml.safe_load((config_dir / "laminate_deterministic.yaml")
                         .read_text())
    raw["coefficients"]["ellipticity"] = 3.0
    p = tmp_path / "bad.yaml"
    p.write_text(yaml.safe_dump(raw))
    rc = main(["validate", str(p)])
    err = capsys.readouterr().err
    assert rc == 1
    assert "A1" in err


def test_cell_prints_effective_tensor(config_dir, capsys):
    rc = main(["cell", str(config_dir / "laminate_deterministic.yaml")])
    out = capsys.readouterr().out
    assert rc == 0
    assert "1.7320508" in out


def test_converge_zero_samples_is_config_error(tmp_path, config_dir, capsys):
    raw = yaml.safe_load((config_dir / "laminate_deterministic.yaml")
                         .read_text())
    raw["experiment"]["samples"] = 0
    p = tmp_path / "zero.yaml"
    p.write_text(yaml.safe_dump(raw))
    assert main(["converge", str(p)]) == 1


def test_effective_emits_model(tmp_path, config_dir):
    rc = main(["--out", str(tmp_path), "effective",
               str(config_dir / "laminate_deterministic.yaml")])
    assert rc == 0
    data = json.loads((tmp_path / "effective_model.json").read_text())
    assert data["schema"] == "apshom-effective-v1"
    assert data["b"][0][0] == pytest.approx(3 ** 0.5, abs=1e-6)


def test_simulate_and_converge_and_plotdata(tmp_path, config_dir, capsys):
    raw = yaml.safe_load((config_dir / "laminate_stochastic.yaml")
                         .read_text())
    raw["domain"]["grid_n"] = 32
    raw["domain"]["T"] = 0.05
    raw["experiment"]["eps_list"] = [0.25, 0.125]
    raw["experiment"]["samples"] = 2
    raw["experiment"]["increment_deltas"] = [0.02]
    p = tmp_path / "tiny.yaml"
    p.write_text(yaml.safe_dump(raw))

    rc = main(["simulate", str(p), "--eps", "0.25", "--seed", "3"])
    out = capsys.readouterr().out
    assert rc == 0
    assert json.loads(out)["eps"] == 0.25

    run_dir = tmp_path / "run"
    rc = main(["--out", str(run_dir), "converge", str(p)])
    assert rc == 0
    assert (run_dir / "convergence.csv").exists()
    assert (run_dir / "manifest.json").exists()

    rc = main(["--out", str(tmp_path / "plot"), "plot-data", str(run_dir)])
    assert rc == 0
    lines = (tmp_path / "plot" / "plotdata.csv").read_text().splitlines()
    assert lines[0] == "metric,eps,value"
    assert any(line.startswith("mean_err") for line in lines[1:])


def test_missing_config_exits_one(capsys):
    assert main(["validate", "/nonexistent/cfg.yaml"]) == 1


def test_simulate_unlisted_eps_exits_one(config_dir, capsys):
    rc = main(["simulate", str(config_dir / "laminate_deterministic.yaml"),
               "--eps", "0.3"])
    assert rc == 1


def test_sigma_subcommand(tmp_path, config_dir, capsys):
    rc = main(["--out", str(tmp_path), "sigma",
               str(config_dir / "laminate_deterministic.yaml")])
    assert rc == 0
    assert (tmp_path / "sigma.csv").exists()
    summary = json.loads((tmp_path / "sigma_summary.json").read_text())
    assert all(v >= 0.8 for v in summary["slopes"].values())

import math

import pytest
import yaml

from apshom.config import ConfigError, load_config

TWO_PI = 2.0 * math.pi


def test_load_shipped_laminate(config_dir):
    cfg = load_config(config_dir / "laminate_deterministic.yaml")
    p = cfg.problem
    assert p.domain.grid_n == 256
    assert p.module.cutoff == 16
    assert p.a.entry(0, 0).mean_value() == pytest.approx(2.0)
    assert p.a.entry(0, 0).eval([0.0], 0.0) == pytest.approx(3.0)
    assert len(p.g.terms) == 1
    assert p.eps_list == (0.25, 0.125, 0.0625, 0.03125)
    assert len(cfg.config_hash) == 64


def test_load_stochastic_noise_channel(config_dir):
    cfg = load_config(config_dir / "laminate_stochastic.yaml")
    noise = cfg.problem.noise
    assert noise.m == 1
    mu = noise.channels[0].pairs[0][0]
    assert mu.mean_value() == pytest.approx(1.0)
    assert mu.eval([0.0], 0.0) == pytest.approx(1.5)   # 1 + 0.5 cos(0)


def test_quasiperiodic_module(config_dir):
    cfg = load_config(config_dir / "quasiperiodic_demo.yaml")
    m = cfg.problem.module
    assert m.n_temporal_generators == 2
    assert m.temporal_generators[1] == pytest.approx(TWO_PI * math.sqrt(2.0))


def test_cutoff_and_seed_overrides(config_dir):
    cfg = load_config(config_dir / "laminate_deterministic.yaml",
                      cutoff_override=10, seed_override=7)
    assert cfg.problem.module.cutoff == 10
    assert cfg.base_seed == 7


def test_schema_required(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("domain: {dimension: 1}\n")
    with pytest.raises(ConfigError):
        load_config(p)


def test_samples_must_be_positive(tmp_path, config_dir):
    raw = yaml.safe_load((config_dir / "laminate_deterministic.yaml").
                         read_text())
    raw["experiment"]["samples"] = 0
    p = tmp_path / "zero.yaml"
    p.write_text(yaml.safe_dump(raw))
    with pytest.raises(ConfigError):
        load_config(p)


def test_r_range_defaults_to_initial_amplitude(config_dir):
    cfg = load_config(config_dir / "laminate_deterministic.yaml")
    lo, hi = cfg.r_range()
    amp = cfg.problem.u0.max_abs(1)
    assert hi == pytest.approx(2.0 * amp)
    assert lo == pytest.approx(-2.0 * amp)


def test_hash_tracks_file_bytes(tmp_path, config_dir):
    src = (config_dir / "laminate_deterministic.yaml").read_text()
    p1 = tmp_path / "a.yaml"
    p2 = tmp_path / "b.yaml"
    p1.write_text(src)
    p2.write_text(src + "\n# comment\n")
    assert load_config(p1).config_hash != load_config(p2).config_hash
    assert load_config(p1).config_hash == load_config(p1).config_hash


def test_raw_terms_records(tmp_path):
    doc = {
        "schema": "apshom-config-v1",
        "domain": {"dimension": 1, "grid_n": 16, "T": 0.05},
        "module": {"scale_2pi": True, "spatial_generators": [[1.0]],
                   "temporal_generators": [1.0], "cutoff": 6},
        "coefficients": {"ellipticity": 0.4, "entries": [
            {"row": 0, "col": 0, "constant": 2.0,
             "terms": [{"spatial_coords": [1], "temporal_coords": [0],
                        "re": 0.5, "im": 0.0}]}]},
        "initial": {"terms": [{"kind": "sine"}]},
        "experiment": {"eps_list": [0.25]},
    }
    p = tmp_path / "records.yaml"
    p.write_text(yaml.safe_dump(doc))
    cfg = load_config(p)
    # Hermitian completion: the single record at +1 implies its mirror
    a = cfg.problem.a.entry(0, 0)
    assert a.eval([0.0], 0.0) == pytest.approx(3.0)
    assert a.mean_value() == pytest.approx(2.0)

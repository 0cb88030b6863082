import json

import pytest

from morphsim.config import (OUT_DIR_ENV, ConfigError, HarnessConfig, load_config,
                             save_config)
from morphsim.environment import EvalConfig
from morphsim.lattice import ContactModel, MaterialParams
from morphsim.robot import RobotSpec


def write(tmp_path, text, name="cfg.json"):
    p = tmp_path / name
    p.write_text(text)
    return p


@pytest.mark.parametrize("text", ["", "{}", "  \n"])
def test_empty_document_gives_defaults(tmp_path, text):
    cfg = load_config(write(tmp_path, text))
    assert cfg == HarnessConfig()
    m = cfg.material
    assert (m.beam_length, m.modulus, m.density, m.friction_high, m.friction_low) == \
        (0.01, 4.0e5, 3000.0, 2.0, 1e-4)
    assert cfg.evaluation.dt == 1.06e-4
    assert cfg.evaluation.steps_per_column == 11670
    assert cfg.evaluation.contact.penalty_stiffness == 1e4
    assert (cfg.experiments.generations, cfg.experiments.runs) == (200, 60)


@pytest.mark.parametrize("doc", [{"p_range": [0, 20]}, {"evaluation": {"p_range": [0, 20]}}])
def test_pressure_range_override_rejected(tmp_path, doc):
    with pytest.raises(ConfigError, match="fixed"):
        load_config(write(tmp_path, json.dumps(doc)))


@pytest.mark.parametrize("doc, where", [
    ({"material": {"modulus": "stiff"}}, "material.modulus"),
    ({"evaluation": {"steps_per_column": 1.5}}, "evaluation.steps_per_column"),
    ({"evaluation": {"contact": {"bogus": 1}}}, "evaluation.contact.bogus"),
    ({"robot": {"body_width_voxels": 0}}, "robot"),
    ({"experiments": {"runs": 0}}, "experiments"),
    ({"schema": "other/9"}, "schema"),
    ({"surprise": 1}, "surprise"),
])
def test_bad_values_name_their_path(tmp_path, doc, where):
    with pytest.raises(ConfigError, match=where.replace(".", r"\.")):
        load_config(write(tmp_path, json.dumps(doc)))


def test_malformed_and_missing_files(tmp_path):
    with pytest.raises(ConfigError, match="malformed"):
        load_config(write(tmp_path, "{oops"))
    with pytest.raises(ConfigError, match="no such"):
        load_config(tmp_path / "absent.json")


def test_round_trip(tmp_path):
    cfg = HarnessConfig(material=MaterialParams(modulus=5e5),
                        robot=RobotSpec(body_length_voxels=12),
                        evaluation=EvalConfig(steps_per_column=300, settle_steps=600,
                                              pressure_ramp_steps=300,
                                              friction_grip=1.5,
                                              contact=ContactModel(penalty_stiffness=2e4)),
                        out_dir="somewhere")
    path = tmp_path / "saved.json"
    save_config(cfg, path)
    assert load_config(path) == cfg
    save_config(load_config(path), tmp_path / "again.json")
    assert (tmp_path / "again.json").read_text() == path.read_text()


def test_out_dir_resolution(monkeypatch):
    monkeypatch.delenv(OUT_DIR_ENV, raising=False)
    assert str(HarnessConfig().resolved_out_dir()) == "results"
    monkeypatch.setenv(OUT_DIR_ENV, "/data/runs")
    assert str(HarnessConfig().resolved_out_dir()) == "/data/runs"
    assert str(HarnessConfig(out_dir="mine").resolved_out_dir()) == "mine"

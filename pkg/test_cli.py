"""
End-to-end tests for the command-line interface and its exit codes.

Usage:
    pytest test_cli.py
"""
import json

import numpy as np
import pytest
import yaml

from conftest import FIXTURES, REALIZABLE_TOY, REALIZABLE_TOY_GAINS, build_plant, load_example, transformed
from main import build_config, build_parser, cli
from src.agents.orchestrator import OrchestratorAgent
from src.models.certificate import GammaSearch, SynthesisResult
from src.models.plant import FaultBounds
from src.models.systems import Gains
from src.skills.lmi_skills import LMISkills
from src.utils.errors import ConfigError

EXAMPLE_PLANT = str(FIXTURES / "example_plant.json")


@pytest.fixture
def toy_files(tmp_path):
    plant = tmp_path / "toy.json"
    plant.write_text(json.dumps(REALIZABLE_TOY), encoding="utf-8")
    gains = tmp_path / "toy_gains.yaml"
    gains.write_text(yaml.safe_dump(REALIZABLE_TOY_GAINS), encoding="utf-8")
    return str(plant), str(gains)


def read_json(path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def test_check_accepts_example_with_override(tmp_path):
    out = tmp_path / "out"
    assert cli(["check", "--plant", EXAMPLE_PLANT, "--override-condition-ii", "--out", str(out)]) == 0
    report = read_json(out / "check_report.json")
    assert report["passed"] is True
    assert report["measurement_passed"] is True


def test_check_rejects_example_without_override(tmp_path):
    out = tmp_path / "out"
    assert cli(["check", "--plant", EXAMPLE_PLANT, "--no-override-condition-ii", "--out", str(out)]) == 1
    report = read_json(out / "check_report.json")
    assert report["realizability_passed"] is False


def test_bad_measurement_matrix_is_a_domain_failure(tmp_path):
    data = load_example()
    data["G"] = np.eye(2).tolist()
    plant = tmp_path / "plant.json"
    plant.write_text(json.dumps(data), encoding="utf-8")
    out = tmp_path / "out"
    assert cli(["check", "--plant", str(plant), "--out", str(out)]) == 1
    assert read_json(out / "check_report.json")["measurement_passed"] is False


def test_empty_plant_file_is_a_usage_error(tmp_path):
    plant = tmp_path / "empty.json"
    plant.write_text("", encoding="utf-8")
    assert cli(["check", "--plant", str(plant), "--out", str(tmp_path / "out")]) == 2


def test_missing_plant_file_is_a_usage_error(tmp_path):
    assert cli(["check", "--plant", str(tmp_path / "nowhere.json"), "--out", str(tmp_path / "out")]) == 2


def test_certify_without_gains_is_rejected(toy_files):
    plant, _ = toy_files
    args = build_parser().parse_args(["certify", "--plant", plant, "--gains", "none"])
    with pytest.raises(ConfigError, match="gains"):
        build_config(args)


def test_flags_override_pipeline_defaults(toy_files, tmp_path):
    plant, gains = toy_files
    args = build_parser().parse_args([
        "simulate", "--plant", plant, "--gains", gains, "--fault", "none",
        "--gamma", "5", "--horizon", "2", "--dt", "0.01", "--out", str(tmp_path),
    ])
    config = build_config(args)
    assert config.fault is None
    assert config.gamma == 5.0
    assert config.simulation.horizon == 2.0
    assert config.simulation.dt == 0.01
    assert str(config.output_dir) == str(tmp_path)


def test_transform_writes_systems(tmp_path):
    out = tmp_path / "out"
    assert cli(["transform", "--plant", EXAMPLE_PLANT, "--out", str(out)]) == 0
    payload = read_json(out / "transform.json")
    assert set(payload) == {"transformed", "augmented", "reduced"}


def test_certify_toy_gains(toy_files, tmp_path):
    plant, gains = toy_files
    out = tmp_path / "out"
    code = cli([
        "certify", "--plant", plant, "--gains", gains, "--fault", "none", "--gamma", "1e6", "--out", str(out),
    ])
    assert code == 0
    report = read_json(out / "certificate.json")
    assert report["passed"] is True
    assert report["trace_y2"] <= 1e6


def test_synthesize_toy(toy_files, tmp_path, small_solver):
    plant, _ = toy_files
    out = tmp_path / "out"
    code = cli(["synthesize", "--plant", plant, "--fault", "none", "--gamma", "1e6", "--seed", "1", "--out", str(out)])
    assert code == 0
    report = read_json(out / "synthesis.json")
    assert report["passed"] is True
    assert report["trace_y2"] <= 1e6


def test_certify_published_gains_fails(tmp_path):
    out = tmp_path / "out"
    code = cli([
        "certify", "--plant", EXAMPLE_PLANT, "--gains", str(FIXTURES / "example_gains.yaml"),
        "--gamma", "1e6", "--out", str(out),
    ])
    assert code == 1
    assert read_json(out / "certificate.json")["passed"] is False


def test_simulate_toy_without_fault(toy_files, tmp_path):
    plant, gains = toy_files
    out = tmp_path / "out"
    code = cli([
        "simulate", "--plant", plant, "--gains", gains, "--fault", "none",
        "--gamma", "1e6", "--horizon", "1", "--dt", "0.01", "--out", str(out),
    ])
    assert code == 0
    summary = read_json(out / "simulation.json")
    assert summary["steps"] == 100
    assert summary["envelope"]["passed"] is True
    rows = (out / "trajectory.csv").read_text(encoding="utf-8").strip().splitlines()
    assert len(rows) == 102


def test_reports_are_byte_identical_across_runs(toy_files, tmp_path):
    plant, gains = toy_files
    outputs = []
    for name in ("a", "b"):
        out = tmp_path / name
        cli(["certify", "--plant", plant, "--gains", gains, "--fault", "none", "--gamma", "1e6", "--out", str(out)])
        outputs.append((out / "certificate.json").read_bytes())
    assert outputs[0] == outputs[1]


def test_synthesize_exits_nonzero_when_search_lands_above_gamma(toy_files, tmp_path, small_solver):
    plant, _ = toy_files
    out = tmp_path / "out"
    code = cli([
        "synthesize", "--plant", plant, "--fault", "none", "--gamma", "1e-9", "--bisect", "--seed", "1",
        "--out", str(out),
    ])
    payload = read_json(out / "synthesis.json")
    assert payload["found"] is True
    assert payload["search"]["result"]["gamma_achieved"] > 1e-9
    assert code == 1


def test_search_result_must_meet_the_requested_gamma(toy_files, tmp_path):
    plant, gains = toy_files
    args = build_parser().parse_args([
        "certify", "--plant", plant, "--gains", gains, "--fault", "none", "--gamma", "0.5", "--out", str(tmp_path),
    ])
    orchestrator = OrchestratorAgent(build_config(args))
    data = transformed(build_plant(REALIZABLE_TOY))
    G = np.array(REALIZABLE_TOY["G"], dtype=float)
    toy_gains = Gains(**REALIZABLE_TOY_GAINS, n_o=1)
    feasible = LMISkills().certify_fixed_gains(*data, G, toy_gains, FaultBounds(alpha=0.1, beta=0.1), 1e6)
    assert isinstance(feasible, SynthesisResult)
    above = feasible.model_copy(update={"gamma_achieved": 0.7})
    below = feasible.model_copy(update={"gamma_achieved": 0.3})
    assert not orchestrator.meets_request(GammaSearch(requested=0.5, lower=0.5, upper=0.7, result=above))
    assert orchestrator.meets_request(GammaSearch(requested=0.5, lower=0.0, upper=0.3, result=below))
    assert not orchestrator.meets_request(above)
    assert not orchestrator.meets_request(GammaSearch(requested=0.5, lower=1e4))


def reproduce(plant, gains, out, gamma="1e6"):
    return cli([
        "reproduce-example", "--plant", plant, "--gains", gains, "--fault", "none", "--gamma", gamma,
        "--horizon", "1", "--dt", "0.01", "--seed", "1", "--out", str(out),
    ])


def test_reproduce_example_is_byte_identical_across_runs(toy_files, tmp_path, small_solver):
    plant, gains = toy_files
    runs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert reproduce(plant, gains, out) == 0
        runs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert set(runs[0]) == {
        "check_report.json", "transform.json", "certificate.json", "synthesis.json", "simulation.json",
        "trajectory.csv",
    }
    assert runs[0] == runs[1]


def test_reproduce_example_fails_when_gamma_is_out_of_reach(toy_files, tmp_path, small_solver):
    plant, gains = toy_files
    out = tmp_path / "out"
    assert reproduce(plant, gains, out, gamma="1e-9") == 1
    assert (out / "synthesis.json").exists()

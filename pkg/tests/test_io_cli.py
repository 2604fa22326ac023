import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from bellforge.cli import main
from bellforge.errors import ConfigError
from bellforge.io import (assignment_from_doc, assignment_to_doc, config_hash, lattice_from_doc, lattice_to_doc,
                          load_lattice, load_model, model_from_doc, model_to_doc, read_json, save_lattice,
                          save_model, space_from_doc, space_to_doc)
from bellforge.lattice import LADDER_PARTITION, bell_conditional, hexagon6, ladder10, lattice_as_hv_model
from bellforge.metrics import SettingsQuad
from bellforge.models import bb1, compose_bb, dilorenzo, random_background_model
from bellforge.optimize import hexagon_grid, paper_grid
from bellforge.presets import LATTICES
from bellforge.reproduce import GRID_OPTIMUM


def _same_model(a, b):
    assert (a.x, a.y, a.lambda0, a.lambda1, a.lambda2) == (b.x, b.y, b.lambda0, b.lambda1, b.lambda2)
    for key in a.tables:
        assert a.tables[key].given_names == b.tables[key].given_names
        assert np.array_equal(a.tables[key].probs, b.tables[key].probs), key
    assert np.array_equal(a.setting_distribution.probs, b.setting_distribution.probs)


@pytest.mark.parametrize("make", [
    bb1,
    lambda: dilorenzo(SettingsQuad(0.1, 1.7, -2.2, 0.9)),
    lambda: lattice_as_hv_model(ladder10(beta=0.8), *LADDER_PARTITION),
    lambda: random_background_model(np.random.default_rng(4)),
])
def test_model_round_trip_is_bit_exact(make, tmp_path):
    m = make()
    _same_model(m, model_from_doc(json.loads(json.dumps(model_to_doc(m)))))
    save_model(m, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    _same_model(m, back)
    assert np.array_equal(compose_bb(m).probs, compose_bb(back).probs)


def test_lattice_round_trip(tmp_path):
    lat = ladder10(beta=0.37).with_couplings({frozenset(("4", "7")): -1.25}).with_fields({"3": 0.1})
    back = lattice_from_doc(json.loads(json.dumps(lattice_to_doc(lat))))
    assert back.nodes == lat.nodes and back.edges == lat.edges and back.fields == lat.fields
    save_lattice(lat, tmp_path / "l.json")
    assert np.array_equal(bell_conditional(load_lattice(tmp_path / "l.json")).probs, bell_conditional(lat).probs)


def test_space_round_trip():
    for space, ref in ((paper_grid(), "ladder10"), (hexagon_grid(), None)):
        back = space_from_doc(json.loads(json.dumps(space_to_doc(space, ref))), LATTICES)
        assert back.betas == space.betas and back.field_values == space.field_values
        assert back.mirror == space.mirror
        assert back.template.nodes == space.template.nodes


def test_assignment_round_trip():
    space = paper_grid()
    doc = assignment_to_doc(space, GRID_OPTIMUM)
    assert doc["fields"]["a|b"] == -1.0 and doc["couplings"]["4-7"] == 4.0
    assert assignment_from_doc(space, doc) == GRID_OPTIMUM


def test_config_hash_ignores_key_order():
    assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})


def test_loader_errors(tmp_path):
    with pytest.raises(ConfigError):
        read_json(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(ConfigError):
        read_json(tmp_path / "bad.json")
    with pytest.raises(ConfigError):
        lattice_from_doc({"nodes": ["a"]})
    with pytest.raises(ConfigError):
        space_from_doc({"template": "nowhere", "betas": [1], "field_values": [0], "coupling_values": [1]}, LATTICES)


# -- command line ------------------------------------------------------------------

def test_lattice_eval_report(tmp_path, capsys):
    assert main(["lattice", "eval", "--preset", "ladder10", "--beta", "1", "--J", "1", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "P(+,+|+,+) = 0.9563" in out and "X_BI = -0.667" in out
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["kind"] == "lattice-eval"
    assert doc["provenance"]["seed"] == 0 and len(doc["provenance"]["config_hash"]) == 64
    assert abs(float(doc["results"]["P_pp_given_pp"]) - 0.9563) <= 5e-4
    with open(tmp_path / "conditional.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["sigma_a", "sigma_b", "sigma1", "sigma2", "p"]
    assert len(rows) == 17


def test_reports_are_byte_identical(tmp_path):
    assert main(["lattice", "scan", "--beta", "0.1:0.5:0.1", "--out", str(tmp_path)]) == 0
    first = (tmp_path / "report.json").read_bytes(), (tmp_path / "curve.csv").read_bytes()
    assert main(["lattice", "scan", "--beta", "0.1:0.5:0.1", "--out", str(tmp_path)]) == 0
    assert first == ((tmp_path / "report.json").read_bytes(), (tmp_path / "curve.csv").read_bytes())
    with open(tmp_path / "curve.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["beta", "p_pp_given_pp", "x_bi"] and len(rows) == 6


def test_model_commands(tmp_path, capsys):
    assert main(["model", "check", "--model", "bb1"]) == 0
    out = capsys.readouterr().out
    assert "OI      violated" in out and "X_BI = 4.0" in out
    assert main(["model", "eval", "--model", "dilorenzo", "--out", str(tmp_path)]) == 0
    with open(tmp_path / "joint.csv", newline="") as fh:
        assert next(csv.reader(fh)) == ["x", "y", "sigma1", "sigma2", "p"]


def test_model_file_and_failing_validation(tmp_path, capsys):
    doc = model_to_doc(bb1())
    save_model(bb1(), tmp_path / "ok.json")
    assert main(["model", "check", "--model", str(tmp_path / "ok.json")]) == 0
    probs = doc["tables"]["sigma1"]["probs"]
    probs[0][0][0][0] = [0.9, 0.0]
    (tmp_path / "broken.json").write_text(json.dumps(doc))
    assert main(["model", "check", "--model", str(tmp_path / "broken.json")]) == 1
    assert "1 normalization residuals" in capsys.readouterr().out
    assert main(["model", "eval", "--model", str(tmp_path / "broken.json")]) == 1


@pytest.mark.parametrize("argv", [
    ["model", "check", "--model", "nonesuch"],
    ["lattice", "eval", "--preset", "square"],
    ["lattice", "eval", "--beta", "one"],
    ["lattice", "eval", "--beta", "0.5,1"],
    ["optimize", "--space", "nowhere"],
    ["optimize", "--space", "hexagon6", "--strategy", "annealing"],
    ["reproduce-all", "--only", "nonesuch"],
])
def test_bad_input_exits_two(argv, capsys):
    assert main(argv) == 2
    assert "bellforge:" in capsys.readouterr().err


def test_unknown_node_in_lattice_file(tmp_path, capsys):
    doc = lattice_to_doc(ladder10())
    doc["edges"][0][1] = "z"
    (tmp_path / "l.json").write_text(json.dumps(doc))
    assert main(["lattice", "eval", "--lattice-file", str(tmp_path / "l.json")]) == 2


def test_reproduce_all_flags_corrupted_ladder(tmp_path, capsys):
    doc = lattice_to_doc(ladder10())
    doc["edges"] = [[i, "8" if (i, j) == ("4", "5") else j, c] for i, j, c in doc["edges"]]
    (tmp_path / "l.json").write_text(json.dumps(doc))
    assert main(["reproduce-all", "--lattice-file", str(tmp_path / "l.json"), "--only", "closed-form"]) == 1
    out = capsys.readouterr().out
    assert "missing pair 4-5" in out and "unexpected pair 4-8" in out


def test_reproduce_all_subset(capsys):
    assert main(["reproduce-all", "--only", "weak-limit,bb1"]) == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if l.startswith("[")]
    assert len(lines) == 2 and all(l.startswith("[PASS]") for l in lines)


def test_hexagon_command_reports_reference(tmp_path, capsys):
    assert main(["hexagon", "--strategy", "hill-climb", "--out", str(tmp_path)]) == 0
    assert "reference 2.82843" in capsys.readouterr().out
    doc = json.loads((tmp_path / "report.json").read_text())
    assert float(doc["results"]["best_x"]) <= 2.0 + 1e-12


def test_optimize_hill_climb(tmp_path, capsys):
    assert main(["optimize", "--space", "paper-grid", "--strategy", "hill-climb", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    assert float(doc["results"]["best_x"]) >= 2.86
    with open(tmp_path / "trajectory.csv", newline="") as fh:
        assert next(csv.reader(fh)) == ["step", "x_bi"]


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "bellforge", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("bellforge ")

import json

import pytest

from hcs import experiments
from hcs.cli import main
from hcs.experiments import ExperimentSpec, csv_body, run_completeness


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


def test_fourier_dictator(capsys):
    out = run_json(capsys, "fourier", "--q", "3", "--n", "2", "--function", "dictator",
                   "--i", "1", "--a", "0")
    assert out["influences"][0] == pytest.approx(2 / 9)
    assert out["influences"][1] == pytest.approx(0.0, abs=1e-15)


def test_op_alpha(capsys):
    out = run_json(capsys, "op", "--kind", "alpha")
    assert out["m"] == 9 and out["pair_uniform"]
    assert all(s == "1" for s in out["row_sums"])


def test_gaussian(capsys):
    out = run_json(capsys, "gaussian", "--rho", "0.5", "--mu", "0.5", "--nu", "0.5")
    assert out["lambda"] == pytest.approx(1 / 3, abs=1e-12)


def test_lc_pipeline(capsys, tmp_path):
    inst = tmp_path / "lc.json"
    code, _, _ = run(capsys, "lc", "gen", "--kind", "one-to-one", "--vertices", "3",
                     "--edges", "3", "--R", "2", "--seed", "5", "--out", str(inst))
    assert code == 0
    out = run_json(capsys, "lc", "eval", "--in", str(inst), "--isat")
    assert out["sat_hidden"] == "1" and out["isat_t"] == "1"
    graph = tmp_path / "g.dimacs"
    assert run(capsys, "reduce", "--kind", "almost3", "--in", str(inst),
               "--out", str(graph))[0] == 0
    chrom = run_json(capsys, "oracle", "chrom", "--in", str(graph), "--qmax", "4")
    assert chrom["chromatic_number"] <= 3
    mis = run_json(capsys, "oracle", "mis", "--in", str(graph))
    assert mis["size"] >= 9
    best = run_json(capsys, "oracle", "lc-best", "--in", str(inst))
    assert best["value"] == "1"


def test_decode(capsys, tmp_path):
    inst = tmp_path / "lc.json"
    run(capsys, "lc", "gen", "--vertices", "2", "--edges", "1", "--R", "1", "--out", str(inst))
    S = tmp_path / "s.json"
    S.write_text("[0, 3]")
    code, out, err = run(capsys, "decode", "--kind", "almost3", "--in", str(inst),
                         "--set", str(S), "--epsilon", "0.3")
    assert code == 0, err
    assert json.loads(out)["J"] == [0, 1]
    S.write_text("[0, 4]")
    code, _, err = run(capsys, "decode", "--kind", "almost3", "--in", str(inst),
                       "--set", str(S))
    assert code == 6 and "not independent" in err


def test_lc_transform(capsys, tmp_path):
    inst = tmp_path / "b.json"
    run(capsys, "lc", "gen", "--bipartite", "--X", "2", "--Y", "2", "--R", "4", "--d", "2",
        "--out", str(inst))
    out = run_json(capsys, "lc", "transform", "--step", "normalize", "--ell", "2",
                   "--in", str(inst))
    assert out["weighted"] and len(out["origin"]) == out["X"]


def test_exit_codes(capsys, tmp_path):
    assert run(capsys, "gaussian", "--rho", "2", "--mu", "0.5", "--nu", "0.5")[0] == 3
    big = tmp_path / "big.json"
    run(capsys, "lc", "gen", "--kind", "two-to-two", "--vertices", "2", "--edges", "1",
        "--R", "8", "--out", str(big))
    assert run(capsys, "reduce", "--kind", "col4", "--in", str(big))[0] == 4
    assert run(capsys, "lc", "eval", "--in", str(tmp_path / "missing.json"))[0] == 3


def test_experiment_failure_exit_code(capsys, monkeypatch):
    def broken(spec):
        raise experiments.ExperimentFailure("monochromatic edges")
    monkeypatch.setitem(experiments.EXPERIMENTS, "completeness", broken)
    assert run(capsys, "experiment", "completeness")[0] == 5


@pytest.mark.parametrize("argv", [
    ["experiment", "completeness", "--kind", "col3", "--vertices", "3", "--R", "1",
     "--seeds", "3"],
    ["experiment", "soundness", "--kind", "almost3", "--vertices", "3", "--R", "2",
     "--set-modes", "color-class,empty,random"],
    ["experiment", "stability", "--families", "constants,mixture,dictators",
     "--operators", "almost3,beckner", "--n", "2,3", "--rho", "0.3,0.6"],
])
def test_experiment_deterministic(capsys, argv):
    code1, out1, _ = run(capsys, *argv, "--seed", "7")
    code2, out2, _ = run(capsys, *argv, "--seed", "7")
    assert code1 == code2 == 0
    assert out1.startswith("# {")
    assert csv_body(out1) == csv_body(out2)


def test_completeness_palette_column():
    for kind, palette in (("col4", "4"), ("col3", "3")):
        rep = run_completeness(ExperimentSpec("completeness", 0,
                                              {"kind": kind, "vertices": 3, "R": 1}))
        lines = csv_body(rep.to_csv()).splitlines()
        col = lines[0].split(",").index("palette")
        assert lines[1].split(",")[col] == palette


def test_timing_footer_is_opt_in(capsys):
    _, plain, _ = run(capsys, "experiment", "completeness", "--seeds", "1")
    _, timed, _ = run(capsys, "experiment", "completeness", "--seeds", "1", "--timing")
    assert "wall_time_s" not in plain
    assert timed.splitlines()[-1].startswith("# wall_time_s")
    assert csv_body(plain) == csv_body(timed)


def test_spec_file(capsys, tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"name": "x", "seed": 3,
                                "params": {"kind": "almost3", "vertices": 4, "R": 2,
                                           "seeds": 2}}))
    code, out, _ = run(capsys, "experiment", "completeness", "--spec", str(spec))
    assert code == 0
    assert len(csv_body(out).splitlines()) == 3

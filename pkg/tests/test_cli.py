import json

import pytest

from superlens.cli import main


def run(*args):
    return main([str(a) for a in args])


def test_forward_measure_reconstruct_chain(tmp_path, capsys):
    fw = tmp_path / "fw"
    assert run("forward", "--eps-re", 16, "--grid-nx", 32, "--grid-ny", 17, "--out", fw) == 0
    assert (fw / "trace.csv").exists()
    ms = tmp_path / "ms.csv"
    assert run("measure", fw / "trace.csv", "--seed", 4, "--out", ms) == 0
    rec = tmp_path / "rec"
    assert run("reconstruct", ms, "--cutoff", "1,3", "--profile", "smooth", "--out", rec) == 0
    assert sorted(p.name for p in rec.glob("*.svg")) == ["N1_overlay.svg", "N3_overlay.svg"]
    metrics = json.loads((rec / "metrics.json").read_text())
    assert set(metrics) == {"1", "3"}
    assert "N=3" in capsys.readouterr().out


def test_forward_field_dump(tmp_path):
    assert run("forward", "--grid-nx", 16, "--grid-ny", 9, "--field", "--out", tmp_path) == 0
    assert (tmp_path / "field.bin").stat().st_size > 0


def test_upsilon_command(tmp_path):
    assert run("upsilon", "--n-max", 12, "--out", tmp_path) == 0
    assert (tmp_path / "upsilon.svg").exists()
    assert run("upsilon", "--n-max", 5, "--eps-re", -1, "--mu-re", -1, "--out", tmp_path / "one") == 0
    assert (tmp_path / "one" / "upsilon.csv").read_text().splitlines()[0].count("Upsilon") == 1


def test_experiment_with_overrides(tmp_path):
    code = run("experiment", "smooth-row3", "--grid-nx", 64, "--grid-ny", 33, "--cutoff", 1,
               "--seed", 9, "--noise", 0.01, "--out", tmp_path)
    assert code == 0
    cfg = json.loads((tmp_path / "smooth-row3" / "config.json").read_text())
    assert cfg["seed"] == 9 and cfg["noise"] == 0.01 and cfg["cutoffs"] == [1]
    assert cfg["grid"] == {"nx": 64, "ny_omega": 33, "ny_slab": 33}
    assert (tmp_path / "smooth-row3" / "manifest.json").exists()


def test_experiment_scene_override(tmp_path):
    assert run("experiment", "smooth-row1", "--eps-re", 4, "--grid-nx", 32, "--grid-ny", 17,
               "--cutoff", 1, "--out", tmp_path) == 0
    cfg = json.loads((tmp_path / "smooth-row1" / "config.json").read_text())
    assert cfg["params"][0]["eps"] == [4.0, 0.0]


def test_experiment_list(capsys):
    assert run("experiment", "--list") == 0
    assert "discontinuous-row3" in capsys.readouterr().out


@pytest.mark.parametrize("args, code", [
    (("experiment", "no-such-scenario"), 2),
    (("reconstruct", "missing.csv"), 4),
    (("forward", "--delta", 0.5, "--grid-nx", 16, "--grid-ny", 9), 2),
    (("forward", "--profile", "zigzag"), 2),
    (("forward", "--eps-re", -1, "--mu-re", -1, "--delta", 0, "--grid-nx", 128, "--grid-ny", 17), 3),
    (("validate", "--check", 42), 2),
])
def test_exit_codes(tmp_path, monkeypatch, args, code):
    monkeypatch.chdir(tmp_path)
    assert run(*args) == code


def test_experiment_numerical_failure_exit_code(tmp_path):
    cfg = tmp_path / "lens.json"
    cfg.write_text(json.dumps({"base": "smooth-row3", "name": "flat", "delta": 0.0,
                               "grid": {"nx": 128, "ny_omega": 17, "ny_slab": 17}}))
    assert run("experiment", cfg, "--out", tmp_path) == 3
    assert json.loads((tmp_path / "flat" / "manifest.json").read_text())["status"] == "failed"


def test_reconstruct_aliasing_is_config_error(tmp_path):
    assert run("forward", "--grid-nx", 16, "--grid-ny", 9, "--out", tmp_path) == 0
    assert run("measure", tmp_path / "trace.csv", "--out", tmp_path / "m.csv") == 0
    assert run("reconstruct", tmp_path / "m.csv", "--cutoff", 60, "--out", tmp_path / "r") == 2


def test_validate_single_check(capsys):
    assert run("validate", "--check", 4) == 0
    assert "[PASS] 4." in capsys.readouterr().out

import json
import os

import pytest

from vsgss import __version__
from vsgss.cli import VERBS, main
from vsgss.model import default_base_case, dump_config
from vsgss.simulate import dump_scenario, sim_preset

MANIFEST_KEYS = {"tool", "version", "verb", "argv", "config_sha256", "timestamp", "outputs"}


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "base.json"
    p.write_text(dump_config(default_base_case()))
    return str(p)


def _manifest(out):
    with open(os.path.join(out, "run_manifest.json")) as fh:
        return json.load(fh)


def test_opsolve_prints_operating_point(tmp_path, cfg_file, capsys):
    out = str(tmp_path / "op")
    assert main(["opsolve", "--config", cfg_file, "--out", out]) == 0
    text = capsys.readouterr().out
    assert "v0 = 1.104536" in text and "theta0 = 0.090660" in text
    with open(os.path.join(out, "op.json")) as fh:
        op = json.load(fh)
    assert abs(op["v_v0_pu"] - 1.1045) < 5e-5 and abs(op["theta_s0_rad"] - 0.0907) < 5e-5
    m = _manifest(out)
    assert MANIFEST_KEYS <= set(m) and m["version"] == __version__ and m["outputs"] == ["op.json"]
    assert len(m["config_sha256"]) == 64


@pytest.mark.parametrize("argv, files", [
    (["kmatrix"], ["kmatrix.json"]),
    (["tf"], ["tf.json", "descriptor.json"]),
    (["tf", "--target", "vsg"], ["tf.json", "descriptor.json"]),
    (["pz", "--channel", "qw"], ["pz_qw.csv", "modes_qw.csv"]),
    (["bode", "--channel", "pw", "--n", "11"], ["bode_pw.csv"]),
    (["step", "--channel", "pv", "--t-end", "2", "--dt", "0.01"], ["step_pv.csv"]),
    (["dcgain"], ["dcgain.json"]),
    (["presets"], ["presets.json"]),
    (["sim", "--t-end", "2"], ["timeseries.csv", "scenario.json", "sim_op.json"]),
])
def test_verbs_write_outputs_and_manifest(tmp_path, argv, files):
    out = str(tmp_path / "out")
    assert main(argv + ["--out", out]) == 0
    for f in files:
        assert os.path.isfile(os.path.join(out, f)), f
    m = _manifest(out)
    assert m["verb"] == argv[0] and sorted(files) == m["outputs"]


def test_every_verb_has_a_command():
    from vsgss.cli import COMMANDS

    assert set(COMMANDS) == set(VERBS)


def test_dcgain_values(tmp_path):
    out = str(tmp_path)
    assert main(["dcgain", "--out", out]) == 0
    with open(os.path.join(out, "dcgain.json")) as fh:
        doc = json.load(fh)
    assert abs(doc["p_to_w"] + 0.025) <= 1e-10


def test_csv_outputs_are_deterministic(tmp_path):
    for run in ("a", "b"):
        assert main(["bode", "--out", str(tmp_path / run)]) == 0
        assert main(["step", "--channel", "pw", "--out", str(tmp_path / run)]) == 0
    for name in ("bode_pw.csv", "bode_qv.csv", "step_pw.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_tf_json_and_descriptor(tmp_path):
    assert main(["tf", "--out", str(tmp_path)]) == 0
    tf = json.loads((tmp_path / "tf.json").read_text())
    desc = json.loads((tmp_path / "descriptor.json").read_text())
    assert set(tf["channels"]) == {"p_to_w", "q_to_w", "p_to_v", "q_to_v"}
    assert len(desc["E"]) == len(desc["states"]) == 16


def test_freq_convention_flag(tmp_path):
    assert main(["dcgain", "--freq-convention", "rad_s", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "dcgain.json").read_text())
    assert abs(doc["p_to_w"] + 0.025) <= 1e-10


def test_sweep_hv(tmp_path):
    out = tmp_path / "hv"
    assert main(["sweep", "--preset", "Hv", "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["all_hold"] is True
    assert all(v["holds"] for v in manifest["verdicts"])
    assert (out / "Hv=4.0" / "p_to_w" / "pz.csv").is_file()
    assert _manifest(str(out))["verdicts"]["hv_cancellation_best_at_hs"] is True


def test_compare_scenario(tmp_path, capsys):
    sc = tmp_path / "base_sim.json"
    sc.write_text(dump_scenario(sim_preset("base")))
    out = tmp_path / "cmp"
    assert main(["compare", "--scenario", str(sc), "--out", str(out)]) == 0
    rep = json.loads((out / "deviation.json").read_text())
    assert rep["passes"] is True
    assert rep["omega"]["normalized_dev"] <= 0.10 and rep["voltage"]["normalized_dev"] <= 0.10
    lines = (out / "compare.csv").read_text().splitlines()
    assert lines[0] == "t_s,sim_domega_pu,lin_domega_pu,sim_dv_pu,lin_dv_pu"
    assert "normalized deviation" in capsys.readouterr().out


def test_compare_nominal_step_reported(tmp_path):
    out = tmp_path / "cmp"
    assert main(["compare", "--load-step", "nominal", "--out", str(out)]) == 0
    rep = json.loads((out / "deviation.json").read_text())
    assert rep["step_pu"] == [0.02, 0.02] and rep["load_step_mode"] == "nominal"


def test_sim_timeseries_header(tmp_path):
    assert main(["sim", "--preset", "XR3", "--t-end", "2", "--dt", "0.001", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "timeseries.csv").read_text().splitlines()
    assert lines[0].split(",")[0] == "t_s" and len(lines) == 2002


def test_unknown_verb_exits_nonzero(capsys):
    assert main(["bogus"]) == 2
    assert "invalid choice" in capsys.readouterr().err


def test_unreadable_config(tmp_path, capsys):
    assert main(["opsolve", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 1
    assert "cannot read config" in capsys.readouterr().err


def test_invalid_config_surfaces_path(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    doc = json.loads(dump_config(default_base_case()))
    doc["vsg"]["H_s"] = -1.0
    bad.write_text(json.dumps(doc))
    assert main(["opsolve", "--config", str(bad), "--out", str(tmp_path)]) == 1
    assert "vsg.H_s" in capsys.readouterr().err


def test_option_validation(tmp_path, capsys):
    assert main(["sweep", "--preset", "nope", "--out", str(tmp_path)]) == 2
    assert main(["bode", "--n", "1", "--out", str(tmp_path)]) == 2
    assert main(["step", "--dt", "-1", "--out", str(tmp_path)]) == 2
    assert main(["sweep", "--out", str(tmp_path)]) == 1
    assert not (tmp_path / "run_manifest.json").exists()


def test_side_effects_stay_in_output_dir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["pz", "--out", "runs/pz"]) == 0
    assert sorted(os.listdir(tmp_path)) == ["runs"]
    assert os.listdir(tmp_path / "runs") == ["pz"]

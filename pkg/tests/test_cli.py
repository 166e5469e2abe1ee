import json

import pytest

from jcsqueeze.cli import (
    EXIT_NOT_CONVERGED, EXIT_NUMERIC, EXIT_OK, EXIT_VALIDATION, format_pulse_table, main,
    parse_config, parse_pulse_table,
)
from jcsqueeze.errors import ConfigError
from jcsqueeze.pulse import PulseTrain

BASE = {"alpha": 1.0, "g_sigma": 0.05, "n_pulses": 2, "strategy": "FSS", "n_max": 16,
        "search": {"coarse_step": 0.1, "fine_step": 0.01, "max_sweeps": 10}}


def write(tmp_path, doc, name="run.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def run(tmp_path, cmd, doc, *extra):
    out = tmp_path / "out"
    return main([cmd, "--config", write(tmp_path, doc), "--out", str(out), "-q", *extra]), out


def test_optimize_artifacts_and_replay_roundtrip(tmp_path, capsys):
    rc, out = run(tmp_path, "optimize", BASE)
    assert rc == EXIT_OK
    for name in ("result.json", "trace.csv", "pulse_table.txt", "manifest.json"):
        assert (out / name).exists()
    res = json.loads((out / "result.json").read_text())
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["n_pulses"] == 2 and "created" in manifest
    capsys.readouterr()
    rc = main(["replay", "--config", write(tmp_path, BASE), "--pulses", str(out / "pulse_table.txt"),
               "--out", str(tmp_path / "rep"), "-q"])
    assert rc == EXIT_OK
    rep = json.loads(capsys.readouterr().out)
    assert rep["var_min"] == res["var_min"] and rep["t_of_min"] == res["t_of_min"]


def test_optimize_deterministic(tmp_path):
    doc = dict(BASE, strategy="IDS", n_pulses=1)
    a = main(["optimize", "--config", write(tmp_path, doc), "--out", str(tmp_path / "a"), "-q", "--seed", "7"])
    b = main(["optimize", "--config", write(tmp_path, doc), "--out", str(tmp_path / "b"), "-q", "--seed", "7",
              "--threads", "2"])
    assert a == b == EXIT_OK
    ra = json.loads((tmp_path / "a" / "result.json").read_text())
    rb = json.loads((tmp_path / "b" / "result.json").read_text())
    ra["config"].pop("search"), rb["config"].pop("search")
    ra["config"]["run"].pop("search"), rb["config"]["run"].pop("search")
    ra["config"]["run"].pop("output_dir"), rb["config"]["run"].pop("output_dir")
    assert ra == rb and ra["rng_seed"] == 7
    assert (tmp_path / "a" / "trace.csv").read_text() == (tmp_path / "b" / "trace.csv").read_text()


def test_replay_pulse_json(tmp_path, capsys):
    pulses = tmp_path / "p.json"
    PulseTrain((1.0, 2.0), 0.05).save(pulses)
    rc, _ = run(tmp_path, "replay", BASE, "--pulses", str(pulses))
    assert rc == EXIT_OK
    assert json.loads(capsys.readouterr().out)["n_pulses"] == 2


def test_replay_needs_pulses(tmp_path):
    assert run(tmp_path, "replay", BASE)[0] == EXIT_VALIDATION


def test_non_converged_exit(tmp_path):
    doc = dict(BASE, strategy="IDS", n_pulses=1, search={"coarse_step": 0.5, "fine_step": 0.1, "max_sweeps": 1})
    rc, out = run(tmp_path, "optimize", doc)
    assert rc == EXIT_NOT_CONVERGED
    assert (out / "result.json").exists()


def test_numeric_invariant_exit(tmp_path):
    # the cutoff is adequate for the input state but the pulses pump the tail
    pulses = tmp_path / "p.json"
    PulseTrain((0.3, 1.0, 1.02), 0.05).save(pulses)
    rc, _ = run(tmp_path, "replay", dict(BASE, n_max=12), "--pulses", str(pulses))
    assert rc == EXIT_NUMERIC


@pytest.mark.parametrize("patch", [
    {"n_pulses": 0}, {"strategy": "GRAPE"}, {"g_sigma": -1}, {"n_max": 3}, {"alpha": -1},
    {"bogus": 1}, {"omega0_amp_mode": "half"}, {"search": {"coarse_step": 0.001}},
    {"grid": {"dt_step": 0.01}}, {"times": [11.0]},
])
def test_validation_exit(tmp_path, patch):
    assert run(tmp_path, "optimize", dict(BASE, **patch))[0] == EXIT_VALIDATION


def test_unreadable_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["optimize", "--config", str(bad), "-q"]) == EXIT_VALIDATION
    assert main(["optimize", "--config", str(tmp_path / "missing.json"), "-q"]) == EXIT_VALIDATION


def test_bad_seed(tmp_path):
    assert run(tmp_path, "optimize", BASE, "--seed", "-3")[0] == EXIT_VALIDATION


def test_compare(tmp_path):
    doc = dict(BASE, strategies=["FSS", {"strategy": "IDS", "n_pulses": 1}])
    rc, out = run(tmp_path, "compare", doc)
    assert rc == EXIT_OK
    rows = (out / "compare.csv").read_text().splitlines()
    assert rows[0].startswith("strategy,n_pulses,n_distinct_pulses,var_min")
    assert [r.split(",")[0] for r in rows[1:]] == ["FSS", "IDS"]
    assert (out / "trace_IDS.csv").exists() and (out / "result_FSS.json").exists()


def test_compare_needs_two(tmp_path):
    assert run(tmp_path, "compare", dict(BASE, strategies=["FSS"]))[0] == EXIT_VALIDATION


def test_wigner(tmp_path, capsys):
    rc, out = run(tmp_path, "wigner", dict(BASE, times=[0.0, 1.5]))
    assert rc == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert len(summary) == 2
    for row in summary:
        assert abs(row["integral"] - 1) < 1e-6
        assert abs(row["marginal_var_x"] - row["var_x"]) < 1e-6
        assert (out / row["file"]).exists()


def test_wigner_off_grid_time(tmp_path):
    doc = dict(BASE, times=[0.0005])
    assert run(tmp_path, "wigner", doc)[0] == EXIT_VALIDATION


def test_circuit_map(tmp_path, capsys):
    doc = {"C_J": 5e-14, "C_g": 5e-14, "C_c": 1e-15, "C_r": 1e-13, "L_J": 2.132e-7, "L_r": 2.132e-7, "T2": 1e-5}
    rc, out = run(tmp_path, "circuit-map", doc)
    assert rc == EXIT_OK
    report = json.loads((out / "circuit_report.json").read_text())
    assert report["feasible"] is True and abs(report["omega/g"] - 200) < 0.1
    assert "omega/g" in capsys.readouterr().out


def test_circuit_map_regime_error(tmp_path):
    doc = {"C_J": 5e-14, "C_g": 5e-14, "C_c": 1e-14, "C_r": 1e-13, "L_J": 2e-7, "L_r": 2e-7}
    assert run(tmp_path, "circuit-map", doc)[0] == EXIT_VALIDATION


def test_pulse_table_roundtrip_exact():
    tr = PulseTrain((0.013, 4.567, 9.999, 2.0), 0.025)
    back = parse_pulse_table(format_pulse_table(tr, 0.1, 2.5, "X"))
    assert back.sorted_centers == tr.sorted_centers
    assert back.sigma == tr.sigma and back.omega0_amp == tr.omega0_amp


def test_alpha_squared_and_explicit_amplitude():
    cfg = parse_config({"alpha_squared": 6, "g_sigma": 0.1, "n_max": 40,
                        "omega0_amp_mode": {"explicit": 12.5}})
    assert abs(cfg.alpha ** 2 - 6) < 1e-12 and cfg.amplitude == 12.5
    with pytest.raises(ConfigError) as exc:
        parse_config({"alpha": 1, "alpha_squared": 1, "g_sigma": 0.1})
    assert exc.value.field == "alpha"

import json

import pytest

from bsde_envelope import __version__
from bsde_envelope.cli import main
from bsde_envelope.config import apply_overrides, build_config, config_hash
from bsde_envelope.errors import ConfigError

SQUEEZE_SMALL = ["--set", "grid.num_space_points=65", "--set", "grid.n_max=8",
                 "--set", "n_ladder=[2,4,8]", "--set", "paths.num_paths=200"]


def write(tmp_path, obj, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def read(path):
    return json.loads(path.read_text())


def test_envelope_verify(config_dir, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["--config", str(config_dir / "envelope_verify_power.json"),
                 "--out", str(out)]) == 0
    rep = read(out / "report.json")
    assert rep["pass"] is True
    assert set(rep["checks"]) >= {"i_sandwich", "ii_monotone", "iii_lipschitz", "v_bound"}
    assert "PASS" in capsys.readouterr().out


def test_solve_writes_field(config_dir, tmp_path):
    out = tmp_path / "out"
    assert main(["--config", str(config_dir / "solve_heat_quadratic.json"),
                 "--out", str(out), "--half-resolution"]) == 0
    rep = read(out / "report.json")
    assert abs(rep["y0"] - 1.0) <= 2e-3
    assert "refinement_delta" in rep
    header = (out / "field.csv").read_text().splitlines()[0]
    assert header == "t,x,y,z"
    assert main(["--validate-report", str(out)]) == 0


def test_solve_reference_failure_exit_2(config_dir, tmp_path):
    code = main(["--config", str(config_dir / "solve_heat_quadratic.json"),
                 "--out", str(tmp_path / "o"), "--set", "reference.y0=5.0"])
    assert code == 2
    assert read(tmp_path / "o" / "report.json")["pass"] is False


def test_squeeze_small(config_dir, tmp_path):
    out = tmp_path / "out"
    assert main(["--config", str(config_dir / "squeeze_power_cos.json"),
                 "--out", str(out), *SQUEEZE_SMALL]) == 0
    rep = read(out / "report.json")
    assert [r["n"] for r in rep["rows"]] == [2.0, 4.0, 8.0]
    assert rep["monotone"]["pass"] and rep["certificate"]["pass"]
    header = (out / "report.csv").read_text().splitlines()[0]
    assert header == "n,y_lower0,y_upper0,gap,bound,eps_num,pass"
    assert main(["--validate-report", str(out / "report.csv")]) == 0


def test_squeeze_abs_zero_gaps(config_dir, tmp_path):
    out = tmp_path / "out"
    assert main(["--config", str(config_dir / "squeeze_abs.json"), "--out", str(out)]) == 0
    assert all(r["gap"] == 0.0 for r in read(out / "report.json")["rows"])


def test_counterexample_sqrt(config_dir, tmp_path):
    out = tmp_path / "out"
    assert main(["--config", str(config_dir / "counterexample_sqrt.json"),
                 "--out", str(out)]) == 0
    rep = read(out / "report.json")
    assert rep["non_uniqueness_witness"] is True
    assert rep["distinct_initial_values"][-1] - rep["distinct_initial_values"][0] == 0.25


def test_counterexample_strict(config_dir, tmp_path):
    out = tmp_path / "out"
    assert main(["--config", str(config_dir / "counterexample_strict.json"),
                 "--out", str(out), "--set", "paths.num_paths=20000",
                 "--set", "grid.num_space_points=401"]) == 0
    rep = read(out / "report.json")
    assert rep["pass"] is True and rep["c"] == 1.0


def test_manifest(config_dir, tmp_path):
    out = tmp_path / "out"
    main(["--config", str(config_dir / "counterexample_sqrt.json"), "--out", str(out),
          "--seed", "99"])
    man = read(out / "manifest.json")
    assert man["seed"] == 99 and man["config"]["seed"] == 99
    assert man["version"] == __version__
    assert man["config_sha256"] == config_hash(man["config"])
    assert man["files"] == ["report.json", "report.csv"]


def test_n_equal_constant_rejected(config_dir, tmp_path, capsys):
    code = main(["--config", str(config_dir / "squeeze_power_cos.json"),
                 "--out", str(tmp_path / "o"), "--set", "n_ladder=[1.5,4]"])
    assert code == 1
    err = capsys.readouterr().err
    assert "search_radius: n ≤ C" in err and "/n_ladder/0" in err
    assert not (tmp_path / "o").exists()


def test_sqrt_generator_rejected_for_squeeze(config_dir, tmp_path, capsys):
    code = main(["--config", str(config_dir / "squeeze_abs.json"), "--out", str(tmp_path),
                 "--set", 'generator={"kind": "sqrt_y", "B": 1.0}'])
    assert code == 1
    assert "counterexample-sqrt" in capsys.readouterr().err


def test_unknown_key_rejected(tmp_path, capsys):
    path = write(tmp_path, {"experiment": "counterexample-sqrt", "seed": 0,
                            "c_values": [0.5], "num_time_steps": 10, "bogus": 1})
    assert main(["--config", path, "--out", str(tmp_path / "o")]) == 1
    assert "bogus" in capsys.readouterr().err


def test_schema_pointer(tmp_path):
    raw = {"experiment": "squeeze", "seed": 0,
           "generator": {"kind": "power_z", "B": 1.5, "K": 1.5, "alpha": 2},
           "terminal": {"kind": "cosine"},
           "grid": {"T": 0.5, "domain_half_width": 4, "num_space_points": 65, "n_max": 8},
           "n_ladder": [4, 8]}
    with pytest.raises(ConfigError, match="/generator/alpha"):
        build_config(raw)


def test_missing_required_field(tmp_path):
    with pytest.raises(ConfigError, match="n_ladder"):
        build_config({"experiment": "envelope-verify", "seed": 0,
                      "generator": {"kind": "abs_z", "B": 1.0},
                      "z_grid": {"lo": -1, "hi": 1, "step": 0.5}})


def test_overrides():
    raw = {"a": {"b": 1}, "c": [1, 2]}
    out = apply_overrides(raw, ["a.b=2.5", "c.1=7", "d=\"x\"", "e=plain"])
    assert out == {"a": {"b": 2.5}, "c": [1, 7], "d": "x", "e": "plain"}
    assert raw == {"a": {"b": 1}, "c": [1, 2]}
    with pytest.raises(ConfigError):
        apply_overrides(raw, ["novalue"])


def test_missing_config_file(tmp_path, capsys):
    assert main(["--config", str(tmp_path / "nope.json")]) == 1
    assert "cannot read" in capsys.readouterr().err


def test_cfl_violation_exit_1(config_dir, tmp_path, capsys):
    code = main(["--config", str(config_dir / "solve_heat_quadratic.json"),
                 "--out", str(tmp_path / "o"), "--set", "grid.num_time_steps=10"])
    assert code == 1
    assert "CFL" in capsys.readouterr().err


def test_validate_report_rejects_bad_csv(tmp_path):
    bad = tmp_path / "report.csv"
    bad.write_text("n,gap\n1,2,3\n")
    assert main(["--validate-report", str(bad)]) == 1
    bad.write_text("n,y_lower0,y_upper0,gap,bound,eps_num,pass\n1,2,3,4,5,6,maybe\n")
    assert main(["--validate-report", str(bad)]) == 1


def test_validate_report_rejects_missing_keys(tmp_path):
    bad = tmp_path / "manifest.json"
    bad.write_text(json.dumps({"seed": 0}))
    assert main(["--validate-report", str(bad)]) == 1


def test_threads_must_be_positive(config_dir):
    assert main(["--config", str(config_dir / "squeeze_abs.json"), "--threads", "0"]) == 1


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out

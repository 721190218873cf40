import json

from pointground.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_solve_end_to_end(tmp_path, capsys):
    out = tmp_path / "gs.json"
    code, _, _ = run_cli(capsys, "solve", "--problem", "nlse", "--alpha", "0.5",
                         "--p", "2.25", "--mass", "0.5", "--grid-n", "512",
                         "--out", str(out))
    assert code == 0
    record = json.loads(out.read_text())
    assert record["converged"] is True
    assert record["problem"] == "nlse"
    assert record["q"] > 1e-3
    assert record["energy"] < 0.0
    assert "phi" not in record


def test_solve_include_phi_schema(tmp_path, capsys):
    out = tmp_path / "gs.json"
    code, _, _ = run_cli(capsys, "solve", "--problem", "nlse", "--alpha", "0.5",
                         "--p", "2.25", "--mass", "0.5", "--grid-n", "512",
                         "--include-phi", "--out", str(out))
    assert code == 0
    record = json.loads(out.read_text())
    assert len(record["phi"]) == record["n"] == 512


def test_solve_save_state_record(tmp_path, capsys):
    from pointground.espace import load_state, mass_sq
    out = tmp_path / "gs.json"
    state_path = tmp_path / "state.json"
    code, _, _ = run_cli(capsys, "solve", "--problem", "nlse", "--alpha", "0.5",
                         "--p", "2.25", "--mass", "0.5", "--grid-n", "512",
                         "--out", str(out), "--save-state", str(state_path))
    assert code == 0
    record = json.loads(state_path.read_text())
    assert set(record) == {"lambda", "q", "n", "r_min", "r_max", "phi"}
    state = load_state(str(state_path))
    assert abs(mass_sq(state) - 0.25) < 1e-10


def test_solve_rejects_bad_exponent(capsys):
    code, _, err = run_cli(capsys, "solve", "--p", "3.5", "--problem", "nlse",
                           "--mass", "0.5")
    assert code == 1
    assert "p" in err


def test_solve_rejects_unknown_problem(capsys):
    code, _, _ = run_cli(capsys, "solve", "--problem", "wave")
    assert code == 1


def test_scan_mass_csv_schema(tmp_path, capsys):
    out = tmp_path / "mass.csv"
    code, _, _ = run_cli(capsys, "scan", "--kind", "mass", "--problem", "nlse",
                         "--alpha", "0.5", "--p", "2.25", "--grid-n", "512",
                         "--masses", "0.4,0.2", "--out", str(out))
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "rho,energy,energy_over_rho2,omega,q,converged,pass"
    assert len(lines) == 3
    # 17-significant-digit floats round-trip
    first = lines[1].split(",")
    assert float(first[0]) == 0.4


def test_scan_empty_mass_list_is_usage_error(capsys):
    code, _, _ = run_cli(capsys, "scan", "--kind", "mass", "--problem", "nlse",
                         "--masses", "", "--grid-n", "512")
    assert code == 1


def test_scan_requires_kind_parameters(capsys):
    code, _, _ = run_cli(capsys, "scan", "--kind", "mass", "--problem", "nlse",
                         "--grid-n", "512")
    assert code == 1
    code, _, _ = run_cli(capsys, "scan", "--kind", "subadd", "--problem", "nlse",
                         "--grid-n", "512")
    assert code == 1


def test_scan_subadd_margins(tmp_path, capsys):
    out = tmp_path / "subadd.csv"
    code, _, _ = run_cli(capsys, "scan", "--kind", "subadd", "--problem", "nlse",
                         "--alpha", "0.5", "--p", "2.25", "--mass", "0.5",
                         "--mus", "0.2,0.4", "--grid-n", "512", "--out", str(out))
    assert code == 0
    lines = out.read_text().strip().splitlines()
    header = lines[0].split(",")
    i_margin = header.index("margin")
    for line in lines[1:]:
        assert float(line.split(",")[i_margin]) > 0.0


def test_verify_deterministic_table(capsys):
    args = ("verify", "--alpha", "0.5", "--grid-n", "512", "--seed", "7")
    code1, out1, _ = run_cli(capsys, *args)
    code2, out2, _ = run_cli(capsys, *args)
    assert code1 == code2 == 0
    assert out1 == out2
    assert "PASS" in out1


def test_verify_coarse_grid_reports(capsys):
    code, out, _ = run_cli(capsys, "verify", "--alpha", "0.5", "--grid-n", "64",
                           "--grid-rmin", "1e-3")
    assert code in (0, 2)
    assert out.count("\n") > 10


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"problem": "nlse", "alpha": 0.5, "p": 2.25,
                               "mass": 0.9, "grid_n": 512}))
    out = tmp_path / "gs.json"
    code, _, _ = run_cli(capsys, "solve", "--config", str(cfg),
                         "--mass", "0.5", "--out", str(out))
    assert code == 0
    record = json.loads(out.read_text())
    assert record["rho"] == 0.5      # flag overrides config
    assert record["alpha"] == 0.5    # config value used


def test_config_unknown_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"problem": "nlse", "granularity": 7}))
    code, _, err = run_cli(capsys, "solve", "--config", str(cfg))
    assert code == 1
    assert "granularity" in err


def test_jobs_environment_default(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("POINTGROUND_JOBS", "2")
    out = tmp_path / "mass.csv"
    code, _, _ = run_cli(capsys, "scan", "--kind", "mass", "--problem", "nlse",
                         "--alpha", "0.5", "--p", "2.25", "--grid-n", "512",
                         "--masses", "0.4,0.2", "--out", str(out))
    assert code == 0


def test_solve_csv_format(tmp_path, capsys):
    out = tmp_path / "gs.csv"
    code, _, _ = run_cli(capsys, "solve", "--problem", "nlse", "--alpha", "0.5",
                         "--p", "2.25", "--mass", "0.5", "--grid-n", "512",
                         "--format", "csv", "--out", str(out))
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0].startswith("problem,alpha,p,rho,energy,omega,q,")
    cells = dict(zip(lines[0].split(","), lines[1].split(",")))
    assert cells["converged"] == "true"

import json
import os

import numpy as np
import pytest

from chargedspin.cli import main
from chargedspin.io import load_data, load_report


def test_generate_and_check_flat(tmp_path, capsys):
    out = tmp_path / "flat"
    rc = main(["generate", "flat", "--n", "3", "--grid-shape", "17",
               "--half-width", "3.0", "--out", str(out)])
    assert rc == 0
    data = load_data(out)
    assert data.grid.shape == (17, 17, 17)
    assert np.isclose(data.grid.spacing, 6.0 / 16)

    capsys.readouterr()
    rc = main(["check", str(out)])
    assert rc == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed["command"] == "check"

    rpt = tmp_path / "check.json"
    rc = main(["check", str(out), "--out", str(rpt)])
    assert rc == 0
    report = load_report(rpt)
    assert report["dec"]["asserted"] is True
    assert report["constraint_rms"]["hamiltonian"] == 0.0


def test_generate_spacing_flag(tmp_path):
    out = tmp_path / "flat2"
    rc = main(["generate", "flat", "--n", "3", "--grid-shape", "11",
               "--spacing", "0.5", "--out", str(out)])
    assert rc == 0
    assert load_data(out).grid.spacing == 0.5


def test_generate_mp_and_adm_csv(tmp_path, capsys):
    out = tmp_path / "mp"
    rc = main(["generate", "mp", "--n", "3", "--grid-shape", "33",
               "--half-width", "6.0", "--masses", "1.0",
               "--centers", "[[0.0, 0.0, 0.0]]", "--out", str(out)])
    assert rc == 0
    rpt = tmp_path / "adm.json"
    rc = main(["adm", str(out), "--radii", "3.0,4.0,5.0,5.5",
               "--out", str(rpt)])
    assert rc == 0
    report = load_report(rpt)
    assert report["adm"]["charge"] > 0.5
    capsys.readouterr()

    csv_path = tmp_path / "adm.csv"
    rc = main(["report", str(rpt), "--format", "csv", "--out", str(csv_path)])
    assert rc == 0
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "r,energy,charge"
    assert len(lines) == 5
    capsys.readouterr()

    rc = main(["report", str(rpt)])
    assert rc == 0
    echoed = json.loads(capsys.readouterr().out)
    assert echoed["adm"]["radii"] == [3.0, 4.0, 5.0, 5.5]


def test_check_flags_dec_violation(tmp_path, capsys):
    # save hand-made violating data, expect exit code 1
    from chargedspin.chargedata import ChargedInitialData, generate_flat
    from chargedspin.grids import centered_box_grid
    from chargedspin.io import save_data
    grid = centered_box_grid(3, 2.0, 17)
    flat = generate_flat(grid)
    data = ChargedInitialData(grid, flat.g, flat.K, 0.8 * grid.points())
    src = tmp_path / "bad"
    save_data(data, src)
    rc = main(["check", str(src), "--tol", "1e-8"])
    capsys.readouterr()
    assert rc == 1


def test_config_file_seeds_flags(tmp_path, capsys):
    out = tmp_path / "flat"
    main(["generate", "flat", "--n", "3", "--grid-shape", "17",
          "--half-width", "3.0", "--out", str(out)])
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"radii": "1.5,2.0,2.5"}))
    rpt = tmp_path / "adm.json"
    rc = main(["adm", str(out), "--config", str(cfg), "--out", str(rpt)])
    capsys.readouterr()
    assert rc == 0
    assert load_report(rpt)["adm"]["radii"] == [1.5, 2.0, 2.5]
    # explicit flag wins over the config value
    rc = main(["adm", str(out), "--config", str(cfg),
               "--radii", "2.0,2.4,2.8", "--out", str(rpt)])
    capsys.readouterr()
    assert rc == 0
    assert load_report(rpt)["adm"]["radii"] == [2.0, 2.4, 2.8]


def test_verify_sl_runs(tmp_path, capsys):
    out = tmp_path / "mp"
    main(["generate", "mp", "--n", "3", "--grid-shape", "21",
          "--half-width", "4.0", "--masses", "1.0",
          "--centers", "[[0.0, 0.0, 0.0]]", "--out", str(out)])
    rpt = tmp_path / "sl.json"
    rc = main(["verify-sl", str(out), "--levels", "2", "--out", str(rpt)])
    capsys.readouterr()
    assert rc == 0
    report = load_report(rpt)
    assert len(report["residuals"]) == 2
    assert report["residuals"][1] < report["residuals"][0]


def test_solve_subcommand(tmp_path, capsys):
    out = tmp_path / "mp"
    main(["generate", "mp", "--n", "3", "--grid-shape", "21",
          "--half-width", "3.0", "--masses", "0.8",
          "--centers", "[[0.0, 0.0, 0.0]]", "--out", str(out)])
    rpt = tmp_path / "solve.json"
    rc = main(["solve", str(out), "--r-out", "2.3", "--r-in", "0.7",
               "--bc", "future", "--tol", "1e-6", "--max-iter", "2000",
               "--out", str(rpt)])
    capsys.readouterr()
    assert rc == 0
    report = load_report(rpt)
    assert report["converged"] is True
    assert report["relative_residual"] < 1e-6
    assert "audit" in report and report["audit"]["bulk"] is not None


def test_thread_cap_env_validation(tmp_path, capsys):
    os.environ["CHARGEDSPIN_THREADS"] = "many"
    try:
        rc = main(["report", str(tmp_path / "nope.json")])
    finally:
        del os.environ["CHARGEDSPIN_THREADS"]
    capsys.readouterr()
    assert rc == 2


def test_missing_report_exit_code(tmp_path, capsys):
    rc = main(["report", str(tmp_path / "nope.json")])
    capsys.readouterr()
    assert rc == 2


def test_csv_without_adm_errors(tmp_path, capsys):
    from chargedspin.io import save_report
    rpt = tmp_path / "r.json"
    save_report({"command": "check"}, rpt)
    with pytest.raises(SystemExit):
        main(["report", str(rpt), "--format", "csv"])
    capsys.readouterr()

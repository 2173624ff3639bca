import pytest

from statinv.cli import main

BASE_CFG = """
operator.kind = integration
operator.n = 64
signal.kind = smooth
noise.kind = {noise}
delta_list = 0.1, 0.05
replicates = 3
seed = 7
method = {method}
study = mse
schedule.c2 = 0.0
schedule.n_max = 64
"""


def _cfg_file(tmp_path, noise="gaussian_white", method="oracle", extra=""):
    path = tmp_path / "run.cfg"
    path.write_text(BASE_CFG.format(noise=noise, method=method) + extra)
    return str(path)


def test_missing_config_exits_2(tmp_path, capsys):
    code = main(["converge", "--config", str(tmp_path / "missing.cfg")])
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_unknown_method_exits_2(tmp_path):
    cfg = _cfg_file(tmp_path)
    assert main(["choose", "--config", cfg, "--method", "lcurve"]) == 2


def test_simulate_is_deterministic(tmp_path):
    cfg = _cfg_file(tmp_path)
    out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["simulate", "--config", cfg, "--seed", "7", "--out", str(out_a)]) == 0
    assert main(["simulate", "--config", cfg, "--seed", "7", "--out", str(out_b)]) == 0
    assert out_a.read_bytes() == out_b.read_bytes()


def test_simulate_without_out_exits_2(tmp_path):
    cfg = _cfg_file(tmp_path)
    assert main(["simulate", "--config", cfg]) == 2
    assert main(["simulate", "--config", cfg, "--out", ""]) == 2


def test_unwritable_out_exits_2(tmp_path, capsys):
    cfg = _cfg_file(tmp_path)
    code = main(["converge", "--config", cfg, "--out", str(tmp_path / "no" / "dir" / "x.csv")])
    assert code == 2
    assert "cannot write" in capsys.readouterr().err


def test_choose_discrepancy_rejects_white_noise(tmp_path, capsys):
    cfg = _cfg_file(tmp_path, noise="gaussian_white", method="discrepancy")
    code = main(["choose", "--config", cfg])
    assert code == 3
    assert "white-noise" in capsys.readouterr().err


def test_choose_discrepancy_on_dirac(tmp_path, capsys):
    cfg = _cfg_file(tmp_path, noise="dirac", method="discrepancy")
    assert main(["choose", "--config", cfg]) == 0
    out = capsys.readouterr().out
    assert "method = discrepancy" in out
    assert "alpha" in out


def test_choose_lepskii_known(tmp_path, capsys):
    cfg = _cfg_file(tmp_path, method="lepskii_known_delta")
    assert main(["choose", "--config", cfg]) == 0
    assert "j_star" in capsys.readouterr().out


def test_choose_writes_csv_row(tmp_path, capsys):
    cfg = _cfg_file(tmp_path, method="lepskii_estimated_delta")
    out = tmp_path / "choice.csv"
    assert main(["choose", "--config", cfg, "--out", str(out)]) == 0
    capsys.readouterr()
    lines = out.read_text().splitlines()
    assert lines[0] == "delta,delta_hat,j_star,alpha_star,error,flags"
    assert len(lines) == 2
    assert lines[1].split(",")[0] == "0.10000000000000001"  # 0.1 at 17 digits


def test_estimate_noise(tmp_path, capsys):
    cfg = _cfg_file(tmp_path)
    assert main(["estimate-noise", "--config", cfg]) == 0
    out = capsys.readouterr().out
    assert "delta_hat" in out
    assert "converged" in out


def test_converge_writes_csv(tmp_path):
    cfg = _cfg_file(tmp_path)
    out = tmp_path / "rows.csv"
    assert main(["converge", "--config", cfg, "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("delta,method,mc_mse")
    assert len(lines) == 3  # header + two deltas


def test_converge_veto_study(tmp_path):
    path = tmp_path / "veto.cfg"
    path.write_text(
        BASE_CFG.format(noise="gaussian_white", method="lepskii_estimated_delta")
        + "study = veto\nsignal.kind = source\nsignal.amplitude = 10.0\n"
    )
    out = tmp_path / "veto.csv"
    assert main(["converge", "--config", str(path), "--out", str(out)]) == 0
    assert out.read_text().startswith("delta,mse_known,mse_estimated")


def test_no_subcommand_exits_2():
    with pytest.raises(SystemExit) as excinfo:
        main([])
    assert excinfo.value.code == 2

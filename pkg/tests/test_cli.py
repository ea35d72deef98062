import csv
import subprocess
import sys

import numpy as np
import pytest

from skruin import cli, config
from skruin.errors import ConfigurationError, NumericalError

SMALL_OUTAGE = """
[grid]
step = 0.01
t_max = 6
b_max = 20.0

[targets]
b0 = [2.0, 5.0]
t = [1, 3, 6]

[mc]
trials = 20000
seed = 11
"""

SMALL_BUDGET = """
[grid]
t_max = 5
b_max = 40.0

[targets]
tau = [3, 5]
epsilon = [0.5, 0.1, 0.01]
"""

SMALL_ULTIMATE = """
[scheme]
kind = "random"
p = [0.1, 0.5]

[targets]
b0 = [0.0, 5.0, 20.0]

[mc]
trials = 20000
horizon = 60
"""


def _write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_outage_csv(tmp_path):
    out = tmp_path / "o.csv"
    assert cli.main(["outage", "--config", _write(tmp_path, SMALL_OUTAGE), "--out", str(out)]) == 0
    rows = _rows(out)
    assert rows[0] == ["t", "b0", "psi_solver", "psi_mc", "psi_mc_se"]
    assert len(rows) == 1 + 2 * 3
    vals = np.array(rows[1:], dtype=float)
    assert np.all(np.abs(vals[:, 2] - vals[:, 3]) <= 3 * vals[:, 4] + 0.01)


def test_outage_rerun_is_byte_identical(tmp_path):
    cfg = _write(tmp_path, SMALL_OUTAGE)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["outage", "--config", cfg, "--out", str(a)]) == 0
    assert cli.main(["outage", "--config", cfg, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_seed_override_changes_mc_only(tmp_path):
    cfg = _write(tmp_path, SMALL_OUTAGE)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    cli.main(["outage", "--config", cfg, "--out", str(a)])
    cli.main(["outage", "--config", cfg, "--out", str(b), "--seed", "12"])
    ra, rb = _rows(a), _rows(b)
    assert [r[2] for r in ra] == [r[2] for r in rb]
    assert [r[3] for r in ra] != [r[3] for r in rb]


def test_mc_disabled_writes_nan(tmp_path, capsys):
    cfg = _write(tmp_path, SMALL_OUTAGE)
    assert cli.main(["outage", "--config", cfg, "--out", "-", "--set", "mc.enabled=false"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[1].endswith("nan,nan")


def test_budget_csv(tmp_path):
    out = tmp_path / "b.csv"
    assert cli.main(["budget", "--config", _write(tmp_path, SMALL_BUDGET), "--out", str(out)]) == 0
    rows = _rows(out)
    assert rows[0] == ["epsilon", "tau", "b0_required", "mean_latency_slots"]
    vals = np.array(rows[1:], dtype=float)
    for tau in (3, 5):
        sel = vals[vals[:, 1] == tau]
        assert np.all(np.diff(sel[:, 2]) > 0)  # smaller epsilon needs more budget
    assert np.all(vals[vals[:, 1] == 5, 2] > vals[vals[:, 1] == 3, 2])


def test_budget_out_of_grid_is_input_error(tmp_path, capsys):
    cfg = _write(tmp_path, SMALL_BUDGET.replace("b_max = 40.0", "b_max = 5.0"))
    assert cli.main(["budget", "--config", cfg, "--out", str(tmp_path / "x.csv")]) == 1
    assert "widen" in capsys.readouterr().err


def test_ultimate_csv(tmp_path):
    out = tmp_path / "u.csv"
    assert cli.main(["ultimate", "--config", _write(tmp_path, SMALL_ULTIMATE), "--out", str(out)]) == 0
    rows = _rows(out)
    assert rows[0] == ["b0", "p", "psi_nystrom", "psi_mc_150", "lundberg_bound"]
    vals = np.array(rows[1:], dtype=float)
    assert np.all(vals[:, 4] >= vals[:, 2] - 1e-12)
    assert np.all(vals[vals[:, 0] == 0.0, 2] == 1.0)
    certain = vals[vals[:, 1] == 0.5]  # above the critical probability
    assert np.all(certain[:, 2] == 1.0) and np.all(certain[:, 4] == 1.0)


def test_ultimate_deterministic_scheme_is_certain(tmp_path, capsys):
    cfg = _write(tmp_path, "[targets]\nb0 = [1.0, 10.0]\n")
    assert cli.main(["ultimate", "--config", cfg, "--out", "-"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[1:] == ["1,nan,1,nan,1", "10,nan,1,nan,1"]


def test_moments_prints_table(capsys):
    assert cli.main(["moments", "--config", "fig6"]) == 0
    out = capsys.readouterr().out
    assert "E[theta] (bit)" in out and "3.308370" in out
    assert "E[xi] (bit)" in out and "5.884048" in out
    assert "p_crit" in out and "0.359902" in out
    assert "r* (1/bit) [p=0.1]" in out and "0.288861" in out


def test_moments_deterministic_has_no_r_star(capsys):
    assert cli.main(["moments"]) == 0
    assert "ruin is certain" in capsys.readouterr().out


@pytest.mark.parametrize("text,needle", [
    ("[targets]\nb0 = []\n", "targets.b0 is empty"),
    ("[scheme]\nkind = \"random\"\n[targets]\nb0 = [1.0]\n", "scheme.p is required"),
    ("[scheme]\nkind = \"random\"\np = [1.5]\n[targets]\nb0 = [1.0]\n", "[0, 1]"),
    ("[grid]\nstep = 0.03\nb_max = 1.0\n[targets]\nb0 = [1.0]\n", "grid"),
    ("[output]\nfloat_format = \"%q\"\n[targets]\nb0 = [1.0]\n", "float_format"),
])
def test_invalid_config_exits_1(tmp_path, capsys, text, needle):
    assert cli.main(["outage", "--config", _write(tmp_path, text), "--out", str(tmp_path / "x")]) == 1
    assert needle in capsys.readouterr().err


def test_unknown_key_reports_line(tmp_path, capsys):
    cfg = _write(tmp_path, "[grid]\nstep = 0.01\n\n[mc]\ntrails = 10\n")
    assert cli.main(["outage", "--config", cfg]) == 1
    err = capsys.readouterr().err
    assert "cfg.toml:5" in err and "trails" in err


def test_unknown_section_and_bad_type():
    with pytest.raises(ConfigurationError, match=":2: unknown section"):
        config.loads("\n[plot]\nx = 1\n", "f")
    with pytest.raises(ConfigurationError, match="expected an integer"):
        config.loads("[grid]\nt_max = 2.5\n")
    with pytest.raises(ConfigurationError, match="section.key=value"):
        config.apply_override(config.ExperimentConfig(), "trials=3")


def test_override_parses_toml_values():
    cfg = config.ExperimentConfig()
    config.apply_override(cfg, "targets.b0=[1, 2.5]")
    config.apply_override(cfg, "scheme.p=0.2")
    config.apply_override(cfg, "scheme.kind=random")
    assert cfg.targets.b0 == [1.0, 2.5] and cfg.scheme.p == [0.2] and cfg.scheme.kind == "random"


def test_missing_config_and_bad_flag(capsys):
    assert cli.main(["outage", "--config", "nope.toml"]) == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["outage", "--bogus"])
    assert exc.value.code == 1


def test_bundled_configs_load():
    for name in config.BUNDLED:
        cfg = config.load(name)
        cli.validate(cfg, {"fig4": "outage", "fig5": "budget", "fig6": "ultimate"}[name])


def test_tolerance_failure_exits_2(tmp_path, capsys, monkeypatch):
    def boom(*a, **k):
        raise NumericalError("Nystrom system condition estimate 1e13 exceeds 1e12")
    monkeypatch.setattr(cli.ultimate, "solve_ultimate_ruin", boom)
    cfg = _write(tmp_path, SMALL_ULTIMATE)
    assert cli.main(["ultimate", "--config", cfg, "--out", str(tmp_path / "u.csv")]) == 2
    err = capsys.readouterr().err
    assert "-- diagnostics --" in err and "FAIL" in err


def test_mc_disagreement_exits_2(tmp_path, capsys, monkeypatch):
    monkeypatch.setattr(cli, "mc_agrees", lambda pm, ps, n: (False, 1e-3))
    cfg = _write(tmp_path, SMALL_OUTAGE)
    assert cli.main(["outage", "--config", cfg, "--out", str(tmp_path / "o.csv")]) == 2
    assert "FAIL t=" in capsys.readouterr().err


def test_mc_agrees():
    ok, se = cli.mc_agrees(0.0, 0.0, 100)
    assert ok and se == 0.0
    ok, _ = cli.mc_agrees(0.0, 0.01, 10_000)
    assert not ok
    ok, _ = cli.mc_agrees(0.5, 0.51, 10_000)
    assert ok


def test_verbose_prints_diagnostics(tmp_path, capsys):
    cfg = _write(tmp_path, SMALL_BUDGET)
    assert cli.main(["budget", "--config", cfg, "--out", str(tmp_path / "b.csv"), "-v"]) == 0
    assert "slots" in capsys.readouterr().err


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "skruin.cli", "moments"], capture_output=True, text=True)
    assert r.returncode == 0 and "p_crit" in r.stdout

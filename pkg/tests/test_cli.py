"""Config parsing, CSV emission, subcommand exit codes."""

import csv
import math

import numpy as np
import pytest

from deltagas import cli

GOOD_CONFIG = """\
[run]
n_particles = 2
t = 0.25
z0 = 0.5 0.0 -0.5 0.0
seed = 11
n_samples = 4096
m_max = 1
out = {out}

[coupling]
beta = 1.0

[mollified]
eps_list = 0.1
"""


def make_config(tmp_path, text=None, **kw):
    out = tmp_path / "result.csv"
    cfg = tmp_path / "run.ini"
    cfg.write_text((text or GOOD_CONFIG).format(out=out, **kw))
    return cfg, out


# ---------------------------------------------------------------------------
# parse_config


def test_parse_minimal_config_defaults(tmp_path):
    cfg, out = make_config(tmp_path)
    parsed = cli.parse_config(cfg.read_text())
    assert parsed.n_particles == 2
    assert parsed.t == 0.25
    assert parsed.seed == 11
    assert parsed.m_max == 1
    assert parsed.h_mode == "auto"
    assert parsed.h_for(0.1) == pytest.approx(0.1 ** 2 / 20.0)
    assert parsed.grid_n == 21
    assert np.array_equal(parsed.z0, [[0.5, 0.0], [-0.5, 0.0]])
    assert parsed.coupling.n_particles == 2


def test_parse_collects_every_violation():
    text = """\
[run]
n_particles = 1
t = -3
z0 = 0.5 0.0
seed = 7
n_samples = 4096
out = x.csv

[coupling]
beta = 1.0
lambda = -0.5

[mystery]
k = 1
"""
    with pytest.raises(cli.ConfigError) as err:
        cli.parse_config(text)
    msgs = "\n".join(err.value.violations)
    assert "unknown section [mystery]" in msgs
    assert "n_particles" in msgs
    assert "t = '-3'" in msgs
    assert "beta or lambda, not both" in msgs
    assert len(err.value.violations) >= 4


def test_parse_missing_required_keys():
    with pytest.raises(cli.ConfigError) as err:
        cli.parse_config("[run]\nn_particles = 2\n")
    msgs = "\n".join(err.value.violations)
    for key in ("t", "z0", "seed", "n_samples", "out"):
        assert f"'{key}'" in msgs


def test_parse_z0_length_checked():
    text = GOOD_CONFIG.replace("z0 = 0.5 0.0 -0.5 0.0", "z0 = 1 2 3")
    with pytest.raises(cli.ConfigError) as err:
        cli.parse_config(text.format(out="o.csv"))
    assert any("z0 needs exactly 4 reals" in v for v in err.value.violations)


def test_parse_beta_lambda_exclusive_and_required():
    text = GOOD_CONFIG.replace("beta = 1.0", "")
    with pytest.raises(cli.ConfigError) as err:
        cli.parse_config(text.format(out="o.csv"))
    assert any("needs beta or lambda" in v for v in err.value.violations)


def test_parse_h_guard():
    text = GOOD_CONFIG + "h = 0.01\n"
    with pytest.raises(cli.ConfigError) as err:
        cli.parse_config(text.format(out="o.csv"))
    assert any("violates h <= eps^2/20" in v for v in err.value.violations)
    ok = cli.parse_config((GOOD_CONFIG + "h = 0.0005\n").format(out="o.csv"))
    assert ok.h_for(0.1) == 0.0005


def test_parse_per_pair_counts():
    text = GOOD_CONFIG.replace("beta = 1.0", "beta = 1.0 2.0")
    with pytest.raises(cli.ConfigError) as err:
        cli.parse_config(text.format(out="o.csv"))
    assert any("beta needs 1 or 1 entries" in v for v in err.value.violations)


def test_parse_unknown_key_reported():
    text = GOOD_CONFIG.replace("[coupling]", "[coupling]\nstrength = 2")
    with pytest.raises(cli.ConfigError) as err:
        cli.parse_config(text.format(out="o.csv"))
    assert any("unknown key 'strength'" in v for v in err.value.violations)


# ---------------------------------------------------------------------------
# CSV writer


def test_write_csv_bytes(tmp_path):
    path = tmp_path / "t.csv"
    cli.write_csv(path, ["a", "b"], [(1.0 / (2.0 * math.pi), "x,y"), (2, "z")])
    data = path.read_bytes()
    val = format(1.0 / (2.0 * math.pi), ".17g")
    assert data == (b"a,b\r\n" + val.encode() + b',"x,y"\r\n2,z\r\n')
    # 17 significant digits round-trip to the same bits
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert float(rows[1][0]) == 1.0 / (2.0 * math.pi)


def test_write_csv_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    cli.write_csv(path, ["only", "header"], [])
    assert path.read_bytes() == b"only,header\r\n"


# ---------------------------------------------------------------------------
# subcommands end to end


def test_series_writes_terms_and_exits_zero(tmp_path, capsys):
    cfg, out = make_config(tmp_path)
    code = cli.main(["series", "--config", str(cfg)])
    assert code == 0
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["m", "sequence", "mean", "stderr", "n", "seed"]
    assert [r[0] for r in rows[1:]] == ["0", "1"]
    assert "series total" in capsys.readouterr().out


def test_series_deterministic_bytes(tmp_path):
    cfg, out = make_config(tmp_path)
    assert cli.main(["series", "--config", str(cfg)]) == 0
    first = out.read_bytes()
    assert cli.main(["series", "--config", str(cfg), "--threads", "3"]) == 0
    assert out.read_bytes() == first


def test_mollified_single_eps_and_csv(tmp_path, capsys):
    cfg, out = make_config(tmp_path)
    code = cli.main(["mollified", "--config", str(cfg)])
    assert code == 0
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["eps", "h", "mean", "stderr", "n", "seed", "lambda",
                       "beta"]
    assert len(rows) == 2
    assert float(rows[1][0]) == 0.1


def test_mollified_rejects_multiple_eps(tmp_path, capsys):
    text = GOOD_CONFIG.replace("eps_list = 0.1", "eps_list = 0.1 0.2")
    cfg, out = make_config(tmp_path, text)
    assert cli.main(["mollified", "--config", str(cfg)]) == 1
    assert "exactly one eps" in capsys.readouterr().err


def test_sweep_rows_and_override_flags(tmp_path):
    text = GOOD_CONFIG.replace("eps_list = 0.1", "eps_list = 0.2 0.1")
    cfg, out = make_config(tmp_path, text)
    other = tmp_path / "other.csv"
    code = cli.main(["sweep", "--config", str(cfg), "--seed", "99",
                     "--out", str(other)])
    assert code == 0
    assert not out.exists()
    with open(other, newline="") as fh:
        rows = list(csv.reader(fh))
    assert [float(r[0]) for r in rows[1:]] == [0.2, 0.1]
    assert all(r[5] == "99" for r in rows[1:])


def test_drift_grid_csv(tmp_path):
    text = GOOD_CONFIG + "\n[drift]\ngrid_n = 5\ngrid_extent = 1.0\n"
    cfg, out = make_config(tmp_path, text)
    assert cli.main(["drift", "--config", str(cfg)]) == 0
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x", "y", "b1x", "b1y", "b2x", "b2y"]
    assert len(rows) == 1 + 25
    # the scan crosses particle 2 at (-0.5, 0): that row must be NaN-marked
    collided = [r for r in rows[1:]
                if float(r[0]) == -0.5 and float(r[1]) == 0.0]
    assert collided and math.isnan(float(collided[0][2]))
    # every other row carries finite drift values with opposite pair pull
    clear = [r for r in rows[1:] if r is not collided[0]]
    assert all(math.isfinite(float(r[2])) for r in clear)


def test_selftest_passes(capsys):
    assert cli.main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "all checks passed" in out
    assert out.count("ok ") >= 5


def test_exit_code_one_on_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[run]\nn_particles = 2\n")
    assert cli.main(["series", "--config", str(bad)]) == 1
    assert cli.main(["series", "--config", str(tmp_path / "absent.ini")]) == 1
    assert cli.main(["series"]) == 1
    cfg, _ = make_config(tmp_path)
    assert cli.main(["series", "--config", str(cfg), "--seed", "-1"]) == 1
    assert cli.main(["series", "--config", str(cfg), "--threads", "0"]) == 1
    capsys.readouterr()


def test_exit_code_two_on_unwritable_output(tmp_path, capsys):
    text = GOOD_CONFIG.format(out=str(tmp_path / "no" / "dir" / "x.csv"))
    cfg = tmp_path / "run.ini"
    cfg.write_text(text)
    assert cli.main(["series", "--config", str(cfg)]) == 2
    assert "failure" in capsys.readouterr().err


def test_help_documents_csv_schemas(capsys):
    with pytest.raises(SystemExit):
        cli.main(["--help"])
    text = capsys.readouterr().out
    assert "m,sequence,mean,stderr,n,seed" in text
    assert "eps,h,mean,stderr,n,seed,lambda,beta" in text
    assert "b1x,b1y" in text

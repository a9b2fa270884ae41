import json
import textwrap

import pytest

from gwi import reports
from gwi.cli import main
from gwi.config import ConfigError, load_config, parse_k_rule

CONJ = """
[offspring]
family = linear-fractional
params = 1.0

[immigration]
family = negative-binomial
params = 1.0, 1.0
"""


def _cfg(tmp_path, body, name="c.cfg"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(CONJ) + textwrap.dedent(body))
    return p


def test_oracle_command(capsys):
    assert main(["oracle", "--family", "conjugate", "--sigma", "1", "--gamma", "1", "--n", "10"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["pmf"][0] == pytest.approx(1 / 11)
    assert out["H_n(0)"] == pytest.approx(1 / 11)


def test_oracle_rejects_other_families(capsys):
    assert main(["oracle", "--family", "poisson", "--sigma", "1", "--gamma", "1", "--n", "3"]) == 1
    assert main(["oracle", "--sigma", "-1", "--gamma", "1", "--n", "3"]) == 1


def test_run_passing_suite_writes_reports(tmp_path, capsys):
    cfg = _cfg(tmp_path, "[run]\nsuite = lower\nformat = both\n[suite:lower]\nn_list = 100, 400\n")
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    assert "PASS lower" in capsys.readouterr().out
    meta, header, rows = reports.read_csv(out / "lower.csv")
    assert header[:3] == ["n", "k_n", "prob"] and len(rows) == 2
    assert meta["suite"] == "lower" and json.loads(meta["model"])["sigma"] == 1.0
    assert b"\r" not in (out / "lower.csv").read_bytes()
    doc = json.loads((out / "lower.json").read_text())
    assert doc["passed"] is True and doc["claim"]
    side = json.loads((out / "lower.csv.meta.json").read_text())
    assert "written_at_unix" in side and "written_at_unix" not in (out / "lower.csv").read_text()


def test_run_is_byte_reproducible(tmp_path):
    cfg = _cfg(tmp_path, "[run]\nsuite = dist\n[suite:dist]\nn_list = 1, 5\nK = 64\n")
    main(["run", "--config", str(cfg), "--out", str(tmp_path / "a")])
    main(["run", "--config", str(cfg), "--out", str(tmp_path / "b"), "--parallel"])
    assert (tmp_path / "a" / "dist.csv").read_bytes() == (tmp_path / "b" / "dist.csv").read_bytes()


def test_failing_check_exits_two(tmp_path, capsys):
    cfg = _cfg(tmp_path, "[run]\nsuite = prop41\n[suite:prop41]\nn_list = 50\nbracket = 0.9, 1.1\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "FAIL prop41" in capsys.readouterr().out


def test_monte_carlo_suite_needs_seed(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("GWI_SEED", raising=False)
    cfg = _cfg(tmp_path, "[run]\nsuite = max\nreps = 500\n[suite:max]\npairs = 20:80\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert "seed required" in capsys.readouterr().err
    monkeypatch.setenv("GWI_SEED", "17")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    meta, _, _ = reports.read_csv(tmp_path / "o" / "max.csv")
    assert meta["seed"] == "17"


def test_env_seed_overrides_file(tmp_path, monkeypatch):
    cfg = _cfg(tmp_path, "[run]\nseed = 3\n")
    monkeypatch.setenv("GWI_SEED", "99")
    assert load_config(cfg).seed == 99
    monkeypatch.setenv("GWI_SEED", "abc")
    with pytest.raises(ConfigError, match="GWI_SEED"):
        load_config(cfg)


@pytest.mark.parametrize(
    "body, fragment",
    [
        ("[run]\nsuite = bogus\n", "[run] suite"),
        ("[run]\nreps = many\n", "[run] reps"),
        ("[run]\nformat = xml\n", "[run] format"),
        ("[grid]\nk_rule = n squared\n", "k_rule"),
        ("[grid]\nn_list = 1.5\n", "n_list"),
    ],
)
def test_config_errors_name_the_field(tmp_path, body, fragment):
    with pytest.raises(ConfigError) as exc:
        load_config(_cfg(tmp_path, body))
    assert fragment in str(exc.value)


def test_model_errors_exit_one(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("[offspring]\nfamily = finite\nparams = 0.3, 0.7\n[immigration]\nfamily = poisson\nparams = 1\n")
    assert main(["run", "--config", str(p)]) == 1
    assert "offspring mean" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "missing.cfg")]) == 1
    assert main(["run"]) == 1


def test_k_rule_parsing():
    r = parse_k_rule("2 * n^1/2")
    assert r(100) == 20 and r(10) == 7
    assert parse_k_rule("n")(17) == 17
    assert parse_k_rule("1 * n^1.5")(100) == 1000
    with pytest.raises(ValueError):
        parse_k_rule("-1 * n")

import json
import math

import pytest

from nullctrl import cli_harness as ch
from nullctrl.errors import ConfigError


def write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_list_catalog(capsys):
    assert ch.main(["list"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) >= 7
    assert [ln.split()[0] for ln in lines] == sorted(ch.SCENARIOS)


def test_unknown_kind(tmp_path, capsys):
    cfg = write(tmp_path, '[[scenario]]\nname = "x"\nkind = "warp-drive"\n')
    with pytest.raises(ConfigError) as ei:
        ch.load_config(cfg)
    assert "lti-cost" in str(ei.value)
    assert ch.main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "available" in capsys.readouterr().err


def test_seed_mandatory(tmp_path):
    cfg = write(tmp_path, '[[scenario]]\nname = "x"\nkind = "inequality-suite"\n')
    with pytest.raises(ConfigError):
        ch.load_config(cfg)


def test_duplicate_names(tmp_path):
    cfg = write(tmp_path, '[[scenario]]\nname = "x"\nkind = "kolmogorov-decay"\n'
                          '[[scenario]]\nname = "x"\nkind = "kolmogorov-decay"\n')
    with pytest.raises(ConfigError):
        ch.load_config(cfg)


def test_unknown_suite_is_config_error(tmp_path):
    cfg = write(tmp_path, '[[scenario]]\nname = "x"\nkind = "inequality-suite"\nseed = 1\n'
                          'suites = ["nope"]\n')
    assert ch.main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_empty_config(tmp_path, capsys):
    cfg = write(tmp_path, "# nothing\n")
    out = tmp_path / "o"
    assert ch.main(["run", str(cfg), "--out", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["scenarios"] == [] and rep["passed"] is True
    assert rep["schema_version"] == 1


def test_lti_cost_chain(tmp_path):
    cfg = write(tmp_path, '[[scenario]]\nname = "c2"\nkind = "lti-cost"\nmode = "chain"\nn = 2\n'
                          'T_exponents = [1, 2, 3, 4, 5, 6]\n')
    out = tmp_path / "o"
    assert ch.main(["run", str(cfg), "--out", str(out)]) == 0
    m = json.loads((out / "report.json").read_text())["scenarios"][0]["metrics"]
    assert float(m["exponent"]) == pytest.approx(-1.5, abs=0.05)
    assert float(m["constant"]) == pytest.approx(2 * math.sqrt(3), rel=0.1)
    assert (out / "c2" / "cost_curve.csv").read_text().startswith("T,cost,bound")


def test_inequality_suite_writes_margins(tmp_path, capsys):
    cfg = write(tmp_path, '[[scenario]]\nname = "iq"\nkind = "inequality-suite"\nseed = 42\n'
                          'suites = ["turan", "gautschi"]\ngautschi_trials = 30\nls_scan = false\n')
    out = tmp_path / "o"
    assert ch.main(["run", str(cfg), "--out", str(out)]) == 0
    assert "[PASS] iq" in capsys.readouterr().out
    text = (out / "iq" / "margins.csv").read_text().splitlines()
    assert text[0] == "# seed=42" and len(text) > 2


def test_report_byte_identical(tmp_path):
    cfg = write(tmp_path, '[[scenario]]\nname = "k"\nkind = "kolmogorov-decay"\n'
                          '[[scenario]]\nname = "iq"\nkind = "inequality-suite"\nseed = 3\n'
                          'suites = ["gautschi"]\ngautschi_trials = 20\nls_scan = false\n')
    a, b = tmp_path / "a", tmp_path / "b"
    ch.main(["run", str(cfg), "--out", str(a)])
    ch.main(["run", str(cfg), "--out", str(b), "--jobs", "2"])
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    assert (a / "iq" / "margins.csv").read_bytes() == (b / "iq" / "margins.csv").read_bytes()


def test_seed_override_changes_margins(tmp_path):
    cfg = write(tmp_path, '[[scenario]]\nname = "iq"\nkind = "inequality-suite"\nseed = 3\n'
                          'suites = ["gautschi"]\ngautschi_trials = 5\nls_scan = false\n')
    ch.main(["run", str(cfg), "--out", str(tmp_path / "a")])
    ch.main(["run", str(cfg), "--out", str(tmp_path / "b"), "--seed", "4"])
    rep = json.loads((tmp_path / "b" / "report.json").read_text())
    assert rep["scenarios"][0]["seed"] == 4
    assert (tmp_path / "a" / "iq" / "margins.csv").read_text() != (tmp_path / "b" / "iq" / "margins.csv").read_text()


def test_packaged_config_loads():
    scen = ch.load_config(ch.packaged_config())
    assert len(scen) == 13
    assert len({s.name for s in scen}) == 13

import json

import numpy as np
import pytest

from wavecoh.cli import main
from wavecoh.config import AnalysisConfig, parse_config
from wavecoh.errors import ConfigError
from wavecoh.series import load_csv


def test_defaults():
    cfg = parse_config()
    assert cfg.omega0 == 6.0 and cfg.dj == 1 / 12 and cfg.nsims == 300
    assert cfg.transform == "quantile"
    assert cfg == AnalysisConfig()


def test_flags_override_file(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"nsims": 300, "seed": 5}))
    cfg = parse_config(p, {"nsims": 500, "seed": None})
    assert cfg.nsims == 500 and cfg.seed == 5


def test_fractional_dj(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"dj": "1/8"}))
    assert parse_config(p).dj == 0.125


@pytest.mark.parametrize("doc, key", [({"dj": 0}, "dj"), ({"nsims": 10}, "nsims"),
                                      ({"transform": "log"}, "transform"), ({"sig_level": 1.5}, "sig_level")])
def test_invalid_values_name_the_key(tmp_path, doc, key):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(ConfigError) as info:
        parse_config(p)
    assert info.value.key == key
    assert key in str(info.value)


def test_unknown_key_is_an_error(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"nsim": 100}))
    with pytest.raises(ConfigError, match="nsim"):
        parse_config(p)


def test_config_round_trips_through_dict():
    cfg = AnalysisConfig(nsims=123, dj=0.25, color_map="viridis")
    assert AnalysisConfig(**cfg.to_dict()) == cfg


# --- CLI --------------------------------------------------------------------


@pytest.fixture
def pair(make_csv, rng):
    t = np.arange(300)
    x = np.sin(2 * np.pi * t / 32) + 0.3 * rng.standard_normal(300)
    y = np.sin(2 * np.pi * (t - 4) / 32) + 0.3 * rng.standard_normal(300)
    return make_csv("x", x), make_csv("y", y), make_csv("z", rng.standard_normal(300))


def test_cli_wtc_and_render(pair, tmp_path, capsys):
    x, y, _ = pair
    out = tmp_path / "out"
    assert main(["wtc", str(x), str(y), "--nsims", "100", "--out", str(out), "--label", "xy"]) == 0
    files = sorted(p.name for p in (out / "xy").iterdir())
    assert files == ["map.csv", "map.json", "map.svg", "run.json", "significance.json"]
    assert "significant" in capsys.readouterr().out
    png = tmp_path / "xy.png"
    assert main(["render", str(out / "xy" / "map.json"), "-o", str(png)]) == 0
    assert png.read_bytes()[:4] == b"\x89PNG"


def test_cli_pwc(pair, tmp_path):
    x, y, z = pair
    rc = main(["pwc", str(x), str(y), str(z), "--nsims", "100", "--out", str(tmp_path), "--transform", "none"])
    assert rc == 0
    run = json.loads((tmp_path / "pwc" / "run.json").read_text())
    assert run["kind"] == "pwc" and run["config"]["transform"] == "none"


def test_cli_series_tools(pair, tmp_path):
    x, y, _ = pair
    q = tmp_path / "q.csv"
    assert main(["transform", str(x), "-o", str(q)]) == 0
    v = load_csv(q).values
    assert 0 < v.min() and v.max() < 1
    r = tmp_path / "r.csv"
    pos = tmp_path / "pos.csv"
    pos.write_text(x.read_text().replace(",-", ",1"))  # any positive denominator
    assert main(["derive", "ratio", f"{x}:value", str(pos), "-o", str(r), "--name", "ratio"]) == 0
    assert load_csv(r, value_column="ratio").n == 300
    c = tmp_path / "c.json"
    assert main(["cwt", str(x), "-o", str(c)]) == 0
    doc = json.loads(c.read_text())
    assert len(doc["real"]) == doc["grid"]["J"]


def test_cli_chain_trends(make_csv, tmp_path):
    base = 10 + np.cos(np.arange(200) / 5)
    a = make_csv("a", 2 * base[:120], start="2013-01-01")
    b = make_csv("b", 3 * base[80:], start="2013-03-22")
    out = tmp_path / "chained.csv"
    assert main(["chain-trends", str(b), str(a), "-o", str(out)]) == 0
    v = load_csv(out, value_column="trends").values
    np.testing.assert_allclose(v / base, 2.0, rtol=1e-9)


def test_exit_code_usage(capsys):
    with pytest.raises(SystemExit) as info:
        main(["wtc"])
    assert info.value.code == 1


def test_exit_code_config(pair, tmp_path):
    x, y, _ = pair
    assert main(["wtc", str(x), str(y), "--dj", "0", "--out", str(tmp_path)]) == 1


def test_exit_code_data(pair, tmp_path, capsys):
    x, _, _ = pair
    assert main(["wtc", str(x), str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) == 2
    assert "missing.csv" in capsys.readouterr().err


def test_exit_code_partial_batch(pair, tmp_path):
    x, y, _ = pair
    manifest = tmp_path / "m.json"
    manifest.write_text(json.dumps({"entries": [
        {"label": "good", "x": str(x), "y": str(y)},
        {"label": "bad", "x": str(x), "y": str(tmp_path / "nope.csv")},
    ]}))
    rc = main(["replicate", "--manifest", str(manifest), "--nsims", "100", "--out", str(tmp_path / "o")])
    assert rc == 3
    rc = main(["replicate", "--manifest", str(tmp_path / "absent.json"), "--out", str(tmp_path / "o")])
    assert rc == 1

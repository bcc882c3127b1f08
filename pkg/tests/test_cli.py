import json

import pytest

from resforge.analysis import synthetic_spectrum, write_csv
from resforge.cli import cli_dispatch, config_hash, validate_config
from resforge.errors import ConfigError


def run(out, *argv):
    return cli_dispatch([*argv, "--out", str(out)])


def load(path):
    return json.loads(path.read_text())


def test_no_arguments_is_usage_error(capsys):
    assert cli_dispatch([]) == 2
    assert "usage" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["frobnicate"], ["fit", "--no-such-flag"], ["process", "--tio2", "abc"]])
def test_usage_errors(argv):
    assert cli_dispatch(argv) == 2


def test_schema_violation_names_field(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"simulation": {"dx": -1}}))
    assert run(tmp_path / "o", "process", "--config", str(cfg)) == 1
    assert "simulation.dx" in capsys.readouterr().err


def test_unknown_config_key_rejected():
    with pytest.raises(ConfigError) as info:
        validate_config({"simulation": {"dx": 0.01, "bogus": 1}})
    assert "simulation" in str(info.value)


def test_domain_error_exit_code(tmp_path):
    flat = tmp_path / "flat.csv"
    flat.write_text("wavelength_nm,intensity\n" + "".join(f"{700 + k / 10},1\n" for k in range(50)))
    assert run(tmp_path / "o", "fit", "--input", str(flat)) == 1


def test_fit_table_device(tmp_path):
    csv = tmp_path / "spectrum.csv"
    write_csv(synthetic_spectrum(0.710341, 9070.0, seed=0), csv)
    assert run(tmp_path / "o", "fit", "--input", str(csv), "--window", "709.5,711.5") == 0
    fit = load(tmp_path / "o" / "fit.json")["fits"][0]["fit"]
    assert fit["q"] == pytest.approx(9070.0, rel=1e-6)
    assert fit["wavelength_nm"] == pytest.approx(710.341, rel=1e-9)
    man = load(tmp_path / "o" / "manifest.json")
    assert man["command"] == "fit" and "fit.json" in man["outputs"]["fit"]
    assert man["config_hash"] == config_hash(man["config"])
    assert man["timings_s"]["total"] >= man["timings_s"]["fit"]


def test_process(tmp_path):
    assert run(tmp_path, "process", "--tio2", "250", "--overfill", "150", "--thin-from", "500",
               "--thin-to", "50", "--roughness", "1,602,1,737") == 0
    p = load(tmp_path / "process.json")
    assert p["ald_cycles"] == 6667 and p["pmma_descum_removal"] == 7.5
    assert p["membrane_etch_time"] == pytest.approx([321.43, 375.0], abs=0.01)
    assert p["scattering_loss_ratio"] == pytest.approx(1.835, abs=1e-3)


def test_seed_controls_synthetic_data(tmp_path):
    for name, seed in (("a", "1"), ("b", "1"), ("c", "2")):
        assert run(tmp_path / name, "fit", "--synthetic", "737,33260,0.05", "--seed", seed) == 0
    text = {n: (tmp_path / n / "synthetic_spectrum.csv").read_text() for n in "abc"}
    assert text["a"] == text["b"] != text["c"]
    q = load(tmp_path / "a" / "fit.json")["fits"][0]["fit"]["q"]
    assert q == pytest.approx(33260.0, rel=0.02)


def test_fit_stats_plot_round_trip(tmp_path):
    assert run(tmp_path / "f", "fit", "--synthetic", "606.5,6040") == 0
    assert run(tmp_path / "s", "stats", "--input", str(tmp_path / "f" / "fit.json"),
               "--synthetic", "606.499,0.623,6040,10", "--seed", "3") == 0
    stats = load(tmp_path / "s" / "stats.json")
    assert [r["stats"]["n_devices"] for r in stats["rows"]] == [1, 10]
    # stats results re-ingest without loss
    assert run(tmp_path / "s2", "stats", "--input", str(tmp_path / "s" / "stats.json")) == 0
    again = load(tmp_path / "s2" / "stats.json")
    assert again["rows"] == stats["rows"] and again["table"] == stats["table"]
    assert run(tmp_path / "p", "plot", "--input", str(tmp_path / "f" / "fit.json")) == 0
    assert (tmp_path / "p" / "fit_0.svg").read_text().startswith("<?xml")


def test_layout_and_plot(tmp_path):
    assert run(tmp_path / "l", "layout", "--device", "phc", "--columns", "4", "--rows", "18",
               "--rotations", "90") == 0
    doc = load(tmp_path / "l" / "layout.json")
    assert len(doc["devices"]) == 72 and not doc["warnings"]
    assert run(tmp_path / "p", "plot", "--input", str(tmp_path / "l" / "layout.json")) == 0
    assert (tmp_path / "p" / "layout.svg").read_text() == (tmp_path / "l" / "layout.svg").read_text()


def test_purcell_arithmetic_mode(tmp_path, capsys):
    assert run(tmp_path, "purcell", "--q", "4400", "--volume", "2.0") == 0
    res = load(tmp_path / "purcell.json")
    assert json.dumps(res).count("167.") >= 1
    assert run(tmp_path / "x", "plot", "--input", str(tmp_path / "purcell.json")) == 1


def test_ring_spectrum(tmp_path):
    assert run(tmp_path, "ring", "--n-eff", "1.9", "--n-g", "2.644", "--t1", "0.98", "--t2", "0.98") == 0
    res = load(tmp_path / "ring.json")
    assert res["fsr_nm"] == pytest.approx(5.9, rel=0.01)
    assert run(tmp_path / "p", "plot", "--input", str(tmp_path / "ring.json")) == 0


def test_config_hash_invariance():
    a = {"simulation": {"dx": 0.02, "courant": 0.5}, "seed": 1}
    b = json.loads('{"seed": 1.0, "simulation": {"courant": 0.5,   "dx": 0.020}}')
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash({"simulation": {"dx": 0.021, "courant": 0.5}, "seed": 1})


def test_config_file_and_flags_merge(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"analysis": {"tio2_nm": 100.0, "overfill_nm": 50.0}}))
    assert run(tmp_path / "o", "process", "--config", str(cfg), "--overfill", "20") == 0
    assert load(tmp_path / "o" / "process.json")["ald_cycles"] == 2000


def test_invalid_json_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text("{not json")
    assert run(tmp_path / "o", "process", "--config", str(cfg)) == 1

import json

import numpy as np
import pytest

from lattice_corr.cli import ConfigError, ExperimentConfig, compare, main, run
from lattice_corr.dataset import CorrelationDataset


def _write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def test_exact_peak_position(tmp_path):
    cfg = _write(tmp_path, "c.json", {"model": {"preset": "nn"}, "mode": "exact",
                                      "grid": {"j": [80, 120], "t": [100.0]}})
    out = tmp_path / "o.csv"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 0
    ds = CorrelationDataset.read(out)
    j, v, _ = ds.series(1, 1, 100.0)
    assert len(j) == 41
    # the front sits at v0 t = 100; the Airy maximum lies about one lambda0 t^(1/3) behind it
    assert j[np.argmax(v)] == 98
    assert ds.meta["config"]["mode"] == "exact"
    assert ds.meta["v0"] == pytest.approx(1.0)


def test_pearcey_metadata(tmp_path):
    cfg = _write(tmp_path, "c.json", {"model": {"preset": "example2"}, "mode": "pearcey",
                                      "grid": {"j": [270, 275], "t": [800.0]}, "observables": [[1, 1], [3, 3]]})
    out = tmp_path / "o.json"
    assert main(["run", "--config", cfg, "--out", str(out), "--format", "json"]) == 0
    ds = CorrelationDataset.read(out)
    assert ds.meta["kstar"] == pytest.approx(1 / 3)
    assert ds.meta["vstar"] == pytest.approx(np.sqrt(2) / 4, rel=1e-6)
    assert {r.method for r in ds.rows} == {"parametrix:pearcey"}


@pytest.mark.parametrize("bad,field", [
    ({"model": {"kappa": [0]}}, "model.kappa"),
    ({"model": {"preset": "nn"}, "mode": "foo"}, "mode"),
    ({"model": {"preset": "nn"}, "N": 100}, "N"),
    ({"model": {"preset": "nn"}, "colour": 1}, "colour"),
    ({"model": {"preset": "nn"}, "observables": [[1, 4]]}, "observables[0]"),
    ({"model": {"preset": "nn"}, "mc": {"seed": 2**64}}, "mc.seed"),
    ({"model": {"preset": "nn"}, "kstar": 0.7}, "kstar"),
])
def test_invalid_config(bad, field, tmp_path, capsys):
    with pytest.raises(ConfigError) as info:
        ExperimentConfig.from_dict(bad)
    assert info.value.field == field
    cfg = _write(tmp_path, "bad.json", bad)
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o.csv")]) == 2
    assert field in capsys.readouterr().err


def test_numerical_failure_exit_code(tmp_path):
    cfg = _write(tmp_path, "c.json", {"model": {"preset": "nn"}, "mode": "exact", "grid": {"j": [0, 0], "t": [1e7]}})
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o.csv")]) == 3


def test_missing_file_exit_code(tmp_path):
    assert main(["run", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path / "o.csv")]) == 2


def test_exact_and_finite_agree_and_compare(tmp_path):
    base = {"model": {"preset": "nn"}, "grid": {"j": [80, 120], "t": [100.0]}}
    a = run(ExperimentConfig.from_dict(dict(base, mode="exact")))
    b = run(ExperimentConfig.from_dict(dict(base, mode="finiteN", N=4001)))
    report, diff = compare(a, b)
    assert report["max_abs_diff"] <= 1e-12
    assert len(diff) == len(a)
    report, _ = compare(a, a)
    assert report["max_abs_diff"] == 0.0
    pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
    a.write(pa)
    b.add(1, 1, 500, 100.0, 0.0)
    b.write(pb)
    assert main(["compare", "--a", str(pa), "--b", str(pb)]) == 2


def test_mc_output_is_byte_identical_across_threads(tmp_path, monkeypatch):
    cfg = _write(tmp_path, "m.json", {"model": {"preset": "nn"}, "mode": "mc", "N": 101,
                                      "grid": {"j": [0, 3], "t": [0.0, 2.0]}, "mc": {"replicas": 300, "seed": 5}})
    texts = []
    for n in ("1", "4"):
        monkeypatch.setenv("LATTICE_CORR_THREADS", n)
        out = tmp_path / f"m{n}.csv"
        assert main(["run", "--config", cfg, "--out", str(out)]) == 0
        texts.append(out.read_bytes())
    assert texts[0] == texts[1]
    ds = CorrelationDataset.loads(texts[0].decode())
    assert ds.meta["seed"] == 5
    assert all(r.method == "mc" and r.stderr > 0 for r in ds.rows)


def test_config_round_trip(tmp_path):
    d = {"model": {"preset": "example1"}, "mode": "finiteN", "N": 301, "beta": 2.0,
         "grid": {"j_values": [0, 5, -5], "t": [1.0, 3.0]}, "observables": [[1, 1], [2, 3]],
         "output": {"format": "json"}}
    cfg = ExperimentConfig.from_dict(d)
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
    ds = run(cfg)
    # a dataset can be fed back as a config
    path = tmp_path / "ds.json"
    ds.write(path)
    out = tmp_path / "again.json"
    assert main(["run", "--config", str(path), "--out", str(out)]) == 0
    assert out.read_text() == ds.to_json()

import json
import subprocess
import sys

import pytest

from hardcore_sbd.cli import ConfigError, load_config, main
from hardcore_sbd.io import read_series_csv


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj, indent=1))
    return str(p)


def tree(d):
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


class TestConfig:
    def test_defaults(self):
        cfg = load_config("couple", None, None)
        assert (cfg.rho, cfg.d, cfg.L, cfg.replicas) == (0.75, 2, 20.0, 20)

    def test_unknown_key_reports_line(self, tmp_path):
        path = write(tmp_path, "c.json", '{\n  "rho": 0.5,\n  "rhoo": 0.6\n}')
        with pytest.raises(ConfigError, match="rhoo.*line 3"):
            load_config("simulate", path, None)

    def test_out_of_range(self, tmp_path):
        with pytest.raises(ConfigError, match="rho"):
            load_config("simulate", write(tmp_path, "c.json", {"rho": 1.5}), None)

    def test_wrong_type(self, tmp_path):
        with pytest.raises(ConfigError, match="field 'd'"):
            load_config("simulate", write(tmp_path, "c.json", {"d": "two"}), None)

    def test_bad_json(self, tmp_path):
        with pytest.raises(ConfigError, match="line 1 column"):
            load_config("simulate", write(tmp_path, "c.json", '{"rho": }'), None)

    def test_seed_override(self, tmp_path):
        assert load_config("cftp", write(tmp_path, "c.json", {"seed": 4}), 9).seed == 9

    def test_int_accepted_for_float(self, tmp_path):
        assert load_config("simulate", write(tmp_path, "c.json", {"L": 12}), None).L == 12.0

    def test_manifest_for_other_command(self, tmp_path):
        path = write(tmp_path, "m.json", {"tool": "hardcore-sbd", "command": "cftp", "config": {}})
        with pytest.raises(ConfigError, match="manifest"):
            load_config("simulate", path, None)


class TestCommands:
    def test_config_error_exit(self, tmp_path):
        path = write(tmp_path, "c.json", {"bogus": 1})
        assert main(["simulate", "--config", path, "--out", str(tmp_path / "o")]) == 1

    def test_simulate(self, tmp_path):
        path = write(tmp_path, "c.json", {"L": 8.0, "T": 2.0, "sample_dt": 0.5, "replicas": 2, "workers": 1})
        out = tmp_path / "sim"
        assert main(["simulate", "--config", path, "--out", str(out)]) == 0
        names = set(tree(out))
        assert {"manifest.json", "trajectory.csv", "snapshot_0000.csv", "snapshot_0001.csv"} <= names
        assert (out / "trajectory.csv").read_text().splitlines()[0] == "replica,t,n_points,intensity"

    def test_couple(self, tmp_path):
        path = write(tmp_path, "c.json", {"L": 8.0, "T": 1.5, "replicas": 2, "workers": 1})
        out = tmp_path / "cpl"
        assert main(["couple", "--config", path, "--out", str(out)]) == 0
        s = read_series_csv(out / "series.csv")
        assert len(s.rows) == 16
        fit = json.loads((out / "decay_fit.json").read_text())
        assert {"fit", "naive_rate", "meets_naive_bound"} <= set(fit)

    def test_cftp_success(self, tmp_path):
        path = write(tmp_path, "c.json", {"L": 8.0, "replicas": 2, "workers": 1, "seed": 3})
        out = tmp_path / "cftp"
        assert main(["cftp", "--config", path, "--out", str(out)]) == 0
        side = json.loads((out / "sample_3.json").read_text())
        assert set(side) == {"seed", "horizon_used", "coalesced", "coincidence_time"}
        assert side["coalesced"] is True

    def test_cftp_rho_zero_exit_3(self, tmp_path, capsys):
        path = write(tmp_path, "c.json", {"rho": 0.0, "L": 8.0, "workers": 1})
        assert main(["cftp", "--config", path, "--out", str(tmp_path / "c0")]) == 3
        assert "never" in capsys.readouterr().err

    def test_sweep(self, tmp_path):
        path = write(tmp_path, "c.json", {"L": 8.0, "rhos": [0.8, 1.0], "T": 8.0, "replicas": 2, "workers": 1})
        out = tmp_path / "sw"
        assert main(["sweep", "--config", path, "--out", str(out)]) == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        assert lines[0] == "rho,intensity,packing_fraction,matern1_ref,matern2_ref,coalesced"
        assert len(lines) == 3

    def test_slab_demo(self, tmp_path):
        path = write(tmp_path, "c.json", {"L": 20.0, "replicas": 5, "workers": 1})
        out = tmp_path / "slab"
        assert main(["slab-demo", "--config", path, "--out", str(out)]) == 0
        demo = json.loads((out / "slab_demo.json").read_text())
        assert demo["lambda_eps"] == pytest.approx(0.05)

    def test_small_check_passes(self, tmp_path):
        path = write(tmp_path, "c.json", {"scale": 0.01, "workers": 1})
        out = tmp_path / "chk"
        assert main(["check", "--config", path, "--out", str(out)]) == 0
        assert all(r["passed"] for r in json.loads((out / "check.json").read_text()))

    def test_manifest_replay_is_byte_identical(self, tmp_path):
        path = write(tmp_path, "c.json", {"L": 8.0, "T": 1.0, "replicas": 2, "workers": 2})
        first = tmp_path / "a"
        assert main(["couple", "--config", path, "--out", str(first)]) == 0
        second = tmp_path / "b"
        assert main(["couple", "--config", str(first / "manifest.json"), "--out", str(second)]) == 0
        assert tree(first) == tree(second)

    def test_entry_point_module(self, tmp_path):
        r = subprocess.run([sys.executable, "-m", "hardcore_sbd.cli", "cftp", "--config",
                            write(tmp_path, "c.json", {"rho": 0.0, "L": 8.0, "workers": 1}),
                            "--out", str(tmp_path / "m")], capture_output=True, text=True)
        assert r.returncode == 3

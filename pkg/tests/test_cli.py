import json
import math

import numpy as np
import pytest
from click.testing import CliRunner

from andersonclock.cli import main

RUNNER = CliRunner()


def _write(path, text):
    path.write_text(text)
    return str(path)


def _run(args):
    return RUNNER.invoke(main, args, catch_exceptions=False)


FREE5 = """
[run]
master_seed = 0

[model]
alpha = 1.0
size = 5

[disorder]
kind = point_mass_zero
"""

RANDOM_PROCESS = """
[run]
master_seed = 11

[model]
alpha = 1.0
size = 300
variant = decaying_site
theta = 1.0471975511965976

[disorder]
kind = uniform
half_width = 1.0

[process]
window_k = 10.0
"""

ENSEMBLE = """
[run]
master_seed = 3

[model]
alpha = 1.0
theta = 1.5707963267948966

[disorder]
kind = uniform
half_width = 1.0

[process]
window_k = 8.0

[ensemble]
sizes = 150 400
realizations = 10
"""


class TestSpectrum:
    def test_free_five_site(self, tmp_path):
        cfg = _write(tmp_path / "c.cfg", FREE5)
        out = tmp_path / "out"
        res = _run(["spectrum", "--config", cfg, "--out", str(out)])
        assert res.exit_code == 0, res.output
        lines = (out / "spectrum.csv").read_text().splitlines()
        assert lines[0] == "index,energy"
        assert len(lines) == 6
        got = np.sort([float(z.split(",")[1]) for z in lines[1:]])
        want = np.sort([2 * math.cos(k * math.pi / 6) for k in range(1, 6)])
        assert np.max(np.abs(got - want)) < 1e-10
        assert (out / "realization.csv").exists()
        assert (out / "resolved.cfg").exists()
        meta = json.loads((out / "run_metadata.json").read_text())
        assert meta["command"] == "spectrum"

    def test_config_echo_contains_defaults(self, tmp_path):
        cfg = _write(tmp_path / "c.cfg", FREE5)
        out = tmp_path / "out"
        _run(["spectrum", "--config", cfg, "--out", str(out)])
        echoed = (out / "resolved.cfg").read_text()
        assert "tolerance" in echoed          # defaulted field is echoed
        assert "variant" in echoed
        assert "master_seed" in echoed


class TestTraceAndProcess:
    def test_trace(self, tmp_path):
        cfg = _write(tmp_path / "c.cfg", RANDOM_PROCESS)
        out = tmp_path / "out"
        res = _run(["pruefer-trace", "--config", cfg, "--out", str(out)])
        assert res.exit_code == 0, res.output
        lines = (out / "trace.csv").read_text().splitlines()
        assert lines[0] == "n,y_n,y_tilde_n"
        assert len(lines) == 302
        assert float(lines[1].split(",")[1]) == pytest.approx(1.0471975511965976)

    def test_process(self, tmp_path):
        cfg = _write(tmp_path / "c.cfg", RANDOM_PROCESS)
        out = tmp_path / "out"
        res = _run(["process", "--config", cfg, "--out", str(out)])
        assert res.exit_code == 0, res.output
        lines = (out / "points.csv").read_text().splitlines()
        assert lines[0] == "i,x_i,energy_i"
        assert len(lines) > 1
        summary = json.loads((out / "process_summary.json").read_text())
        assert summary["points"] == len(lines) - 1
        assert summary["max_remainder"] <= 8 * 10.0**2 / 300

    def test_window_collision_exit_code(self, tmp_path):
        cfg = _write(tmp_path / "c.cfg", RANDOM_PROCESS.replace(
            "theta = 1.0471975511965976", "theta = 0.01"))
        out = tmp_path / "out"
        res = RUNNER.invoke(main, ["process", "--config", cfg, "--out", str(out)])
        assert res.exit_code == 4
        assert "error kind=window" in res.output

    def test_uniform_scaled_variant_accepted(self, tmp_path):
        cfg = _write(tmp_path / "c.cfg", RANDOM_PROCESS.replace(
            "variant = decaying_site", "variant = uniform_scaled"))
        out = tmp_path / "out"
        res = _run(["process", "--config", cfg, "--out", str(out)])
        assert res.exit_code == 0, res.output
        assert "variant = uniform_scaled" in (out / "resolved.cfg").read_text()

    def test_unknown_variant_rejected(self, tmp_path):
        cfg = _write(tmp_path / "c.cfg", RANDOM_PROCESS.replace(
            "variant = decaying_site", "variant = quadratic"))
        res = RUNNER.invoke(main, ["process", "--config", cfg, "--out",
                                   str(tmp_path / "out")])
        assert res.exit_code == 2
        assert "model.variant" in res.output


class TestEnsemble:
    def test_runs_and_summarizes(self, tmp_path):
        cfg = _write(tmp_path / "c.cfg", ENSEMBLE)
        out = tmp_path / "out"
        res = _run(["ensemble", "--config", cfg, "--out", str(out)])
        assert res.exit_code == 0, res.output
        assert res.output.count("ensemble:") == 1  # one-line summary
        summary = json.loads((out / "summary.json").read_text())
        assert set(summary["sizes"]) == {"150", "400"}
        st = summary["sizes"]["400"]
        assert st["sample_count"] == sum(st["histogram"]["counts"])
        assert (out / "spacings.csv").exists()
        assert (out / "offsets.csv").exists()

    def test_byte_identical_reruns_and_thread_invariance(self, tmp_path):
        cfg = _write(tmp_path / "c.cfg", ENSEMBLE)
        outs = []
        for name, threads in (("a", None), ("b", None), ("c", 1), ("d", 4)):
            out = tmp_path / name
            args = ["ensemble", "--config", cfg, "--out", str(out)]
            if threads:
                args += ["--threads", str(threads)]
            res = _run(args)
            assert res.exit_code == 0, res.output
            outs.append(out)
        ref_sp = (outs[0] / "spacings.csv").read_bytes()
        ref_off = (outs[0] / "offsets.csv").read_bytes()
        ref_sum = (outs[0] / "summary.json").read_bytes()
        for out in outs[1:]:
            assert (out / "spacings.csv").read_bytes() == ref_sp
            assert (out / "offsets.csv").read_bytes() == ref_off
            assert (out / "summary.json").read_bytes() == ref_sum

    def test_seed_flag_overrides_config(self, tmp_path):
        cfg = _write(tmp_path / "c.cfg", ENSEMBLE)
        out1, out2 = tmp_path / "s1", tmp_path / "s2"
        _run(["ensemble", "--config", cfg, "--out", str(out1), "--seed", "3"])
        _run(["ensemble", "--config", cfg, "--out", str(out2), "--seed", "4"])
        assert ((out1 / "spacings.csv").read_bytes()
                != (out2 / "spacings.csv").read_bytes())
        # seed 3 equals the config default
        cfg_out = tmp_path / "s3"
        _run(["ensemble", "--config", cfg, "--out", str(cfg_out)])
        assert ((out1 / "spacings.csv").read_bytes()
                == (cfg_out / "spacings.csv").read_bytes())

    def test_malformed_alpha_names_field(self, tmp_path):
        cfg = _write(tmp_path / "c.cfg", ENSEMBLE.replace("alpha = 1.0", "alpha = -1"))
        out = tmp_path / "out"
        res = RUNNER.invoke(main, ["ensemble", "--config", cfg, "--out", str(out)])
        assert res.exit_code == 2
        line = [l for l in res.output.splitlines() if l.startswith("error")]
        assert len(line) == 1
        assert "kind=validation" in line[0] and "alpha" in line[0]

    def test_non_numeric_field_rejected(self, tmp_path):
        cfg = _write(tmp_path / "c.cfg", ENSEMBLE.replace(
            "realizations = 10", "realizations = many"))
        res = RUNNER.invoke(main, ["ensemble", "--config", cfg, "--out",
                                   str(tmp_path / "out")])
        assert res.exit_code == 2
        assert "ensemble.realizations" in res.output


class TestOtherCommands:
    def test_subsequence_golden(self, tmp_path):
        cfg = _write(tmp_path / "c.cfg", """
[model]
theta = 1.5707963267948966

[subsequence]
target = 0.0
count = 3
l_max = 100
""")
        out = tmp_path / "out"
        res = _run(["subsequence", "--config", cfg, "--out", str(out)])
        assert res.exit_code == 0, res.output
        lines = (out / "subsequence.csv").read_text().splitlines()
        assert [l.split(",")[0] for l in lines[1:]] == ["1", "3", "5"]

    def test_compare_oracle_passes(self, tmp_path):
        cfg = _write(tmp_path / "c.cfg", """
[run]
master_seed = 5

[model]
alpha = 1.0

[disorder]
kind = uniform
half_width = 1.0

[compare]
sizes = 400
thetas = 1.0471975511965976
realizations = 3
window_k = 15.0
tolerance = 1e-9
""")
        out = tmp_path / "out"
        res = _run(["compare-oracle", "--config", cfg, "--out", str(out)])
        assert res.exit_code == 0, res.output
        report = json.loads((out / "compare.json").read_text())
        assert report["status"] == "pass"
        assert report["max_abs_diff"] < 1e-9
        assert report["count_mismatches"] == 0
        assert report["points"] > 0

    def test_diagnose_tail(self, tmp_path):
        cfg = _write(tmp_path / "c.cfg", """
[run]
master_seed = 9

[model]
alpha = 1.0
theta = 1.5707963267948966

[disorder]
kind = uniform
half_width = 1.0

[diagnose]
beta = 0.75
n_list = 5 20
m = 400
realizations = 50
""")
        out = tmp_path / "out"
        res = _run(["diagnose-tail", "--config", cfg, "--out", str(out)])
        assert res.exit_code == 0, res.output
        lines = (out / "diagnostics.csv").read_text().splitlines()
        assert lines[0] == "N,moment,envelope"
        assert len(lines) == 3
        summary = json.loads((out / "tail_summary.json").read_text())
        assert summary["beta"] == 0.75
        assert (out / "tail_exit.csv").exists()

    def test_missing_config_is_io_error(self, tmp_path):
        res = RUNNER.invoke(main, ["spectrum", "--config",
                                   str(tmp_path / "nope.cfg"), "--out",
                                   str(tmp_path / "out")])
        assert res.exit_code == 3
        assert "error kind=io" in res.output

    def test_missing_required_field(self, tmp_path):
        cfg = _write(tmp_path / "c.cfg", "[model]\nalpha = 1.0\n")
        res = RUNNER.invoke(main, ["spectrum", "--config", cfg, "--out",
                                   str(tmp_path / "out")])
        assert res.exit_code == 2
        assert "model.size" in res.output

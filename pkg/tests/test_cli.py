"""CLI behaviour: subcommands, formats, exit codes, determinism."""
import json
import math

import numpy as np
import pytest

from phonon_hop.cli import main
from phonon_hop.constants import TWO_PI
from phonon_hop.kerr_model import coherence_metrics, kerr_chi, thermal_distribution, hopping_signal
from phonon_hop.trap_physics import (
    TrapConfig,
    mean_stretch_occupation,
    mode_spectrum,
    rms_velocity,
)

BASE = """\
[trap]
omega_y_hz = 2.87e6
omega_z_hz = 213e3
"""


def write_cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def read_csv(path):
    lines = [l for l in path.read_text().splitlines() if l and not l.startswith("#")]
    header = lines[0].split(",")
    rows = [dict(zip(header, (float(x) for x in line.split(",")))) for line in lines[1:]]
    return header, rows


class TestDerive:
    def test_reference_values_in_output(self, tmp_path):
        cfg = write_cfg(tmp_path, BASE)
        out = tmp_path / "derive.csv"
        assert main(["derive", "--config", cfg, "--out", str(out)]) == 0
        _, rows = read_csv(out)
        assert len(rows) == 1
        record = rows[0]
        assert record["kappa_hz"] == pytest.approx(7.9e3, rel=0.01)
        assert record["chi_hz"] == pytest.approx(-0.13, abs=0.005)
        assert record["d0_length_scale_m"] == pytest.approx(12.5e-6, rel=0.01)
        assert record["doppler_limit_k"] == pytest.approx(490e-6, rel=0.01)

    def test_empty_sweep_gives_empty_output(self, tmp_path):
        cfg = write_cfg(tmp_path, BASE + "[sweep]\nomega_y_hz =\nomega_z_hz =\n")
        out = tmp_path / "derive.csv"
        assert main(["derive", "--config", cfg, "--out", str(out)]) == 0
        _, rows = read_csv(out)
        assert rows == []

    def test_invalid_config_exits_2_and_names_key(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, "[trap]\nomega_y_hz = 100e3\nomega_z_hz = 213e3\n")
        assert main(["derive", "--config", cfg]) == 2
        assert "omega_y_hz" in capsys.readouterr().err

    def test_json_format(self, tmp_path):
        cfg = write_cfg(tmp_path, BASE + "[output]\nformat = json\n")
        out = tmp_path / "derive.json"
        assert main(["derive", "--config", cfg, "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["records"][0]["kappa_hz"] == pytest.approx(7904.0, rel=1e-3)
        assert payload["config"]["omega_y_hz"] == 2.87e6

    def test_dump_config_round_trip(self, tmp_path):
        cfg = write_cfg(tmp_path, BASE + "[sweep]\nomega_z_hz = 213e3, 50e3\n")
        dumped = tmp_path / "effective.cfg"
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["derive", "--config", cfg, "--out", str(out1),
                     "--dump-config", str(dumped)]) == 0
        assert main(["derive", "--config", str(dumped), "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()


class TestSimulate:
    def test_chi_zero_is_bare_hopping(self, tmp_path):
        cfg = write_cfg(tmp_path, BASE)
        out = tmp_path / "trace.csv"
        assert main(["simulate", "--config", cfg, "--out", str(out),
                     "--t-max", "2e-3", "--points", "64", "--chi-zero"]) == 0
        _, rows = read_csv(out)
        kappa = mode_spectrum(TrapConfig()).kappa
        for row in rows:
            assert row["p_excited"] == pytest.approx(
                math.sin(kappa * row["time_s"] / 2) ** 2, abs=1e-12
            )

    def test_matches_model_closed_form(self, tmp_path):
        cfg = write_cfg(tmp_path, BASE)
        out = tmp_path / "trace.csv"
        assert main(["simulate", "--config", cfg, "--out", str(out),
                     "--t-max", "5e-3", "--points", "500"]) == 0
        _, rows = read_csv(out)
        config = TrapConfig()
        spectrum = mode_spectrum(config)
        chi = kerr_chi(spectrum, config.omega_z, config.mass).chi
        mean_n = mean_stretch_occupation(
            rms_velocity(config.axial_temperature, config.mass),
            spectrum.omega_stretch, config.mass,
        )
        times = np.array([row["time_s"] for row in rows])
        expected = hopping_signal(spectrum.kappa, chi, thermal_distribution(mean_n), times)
        observed = np.array([row["p_excited"] for row in rows])
        assert np.max(np.abs(observed - expected.values)) < 1e-9

    def test_seeded_noise_is_deterministic(self, tmp_path):
        cfg = write_cfg(tmp_path, BASE + "[synth]\nnoise_sigma = 0.02\nseed = 5\n")
        out1, out2 = tmp_path / "t1.csv", tmp_path / "t2.csv"
        for out in (out1, out2):
            assert main(["simulate", "--config", cfg, "--out", str(out),
                         "--t-max", "2e-3", "--points", "200"]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        out3 = tmp_path / "t3.csv"
        assert main(["simulate", "--config", cfg, "--out", str(out3), "--seed", "6",
                     "--t-max", "2e-3", "--points", "200"]) == 0
        assert out1.read_bytes() != out3.read_bytes()

    def test_binomial_noise_stays_in_unit_interval(self, tmp_path):
        cfg = write_cfg(tmp_path, BASE + "[synth]\nshots = 20\nseed = 3\n")
        out = tmp_path / "shots.csv"
        assert main(["simulate", "--config", cfg, "--out", str(out),
                     "--t-max", "2e-3", "--points", "200"]) == 0
        _, rows = read_csv(out)
        values = [row["p_excited"] for row in rows]
        assert min(values) >= 0.0 and max(values) <= 1.0
        # 20 shots quantise probabilities to multiples of 1/20
        assert all(abs(v * 20 - round(v * 20)) < 1e-9 for v in values)

    def test_bad_grid_exits_2(self, tmp_path):
        cfg = write_cfg(tmp_path, BASE)
        assert main(["simulate", "--config", cfg, "--t-max", "-1", "--out", "-"]) == 2
        assert main(["simulate", "--config", cfg, "--points", "1", "--out", "-"]) == 2


class TestFit:
    def simulate_trace(self, tmp_path, extra="", args=()):
        cfg = write_cfg(tmp_path, BASE + extra)
        trace = tmp_path / "trace.csv"
        code = main(["simulate", "--config", cfg, "--out", str(trace),
                     "--t-max", "5e-3", "--points", "400", *args])
        assert code == 0
        return cfg, trace

    def test_round_trip_recovers_kappa(self, tmp_path):
        cfg, trace = self.simulate_trace(
            tmp_path, extra="[synth]\nnoise_sigma = 0.02\nseed = 1\n"
        )
        report_path = tmp_path / "fit.json"
        assert main(["fit", "--input", str(trace), "--config", cfg,
                     "--out", str(report_path)]) == 0
        report = json.loads(report_path.read_text())
        assert report["converged"] is True
        kappa_hz = mode_spectrum(TrapConfig()).kappa / TWO_PI
        bin_width = 1.0 / 5e-3
        assert abs(report["metrics"]["hopping_frequency_hz"] - kappa_hz) < bin_width
        assert len(report["fit"]["covariance"]) == 25

    def test_too_few_points_exits_2(self, tmp_path):
        trace = tmp_path / "short.csv"
        trace.write_text(
            "time_s,p_excited\n" + "".join(f"{i * 1e-4},0.5\n" for i in range(5)),
            encoding="utf-8",
        )
        assert main(["fit", "--input", str(trace), "--out", "-"]) == 2

    def test_non_monotone_times_exit_2(self, tmp_path):
        rows = [(0.0, 0.1), (1e-4, 0.2), (5e-5, 0.3)] + [(i * 1e-4, 0.1) for i in range(2, 8)]
        trace = tmp_path / "bad.csv"
        trace.write_text(
            "time_s,p_excited\n" + "".join(f"{t},{v}\n" for t, v in rows), encoding="utf-8"
        )
        assert main(["fit", "--input", str(trace), "--out", "-"]) == 2

    def test_malformed_row_reports_number(self, tmp_path, capsys):
        trace = tmp_path / "mangled.csv"
        trace.write_text("time_s,p_excited\n0.0,0.1\n1e-4,broken\n", encoding="utf-8")
        assert main(["fit", "--input", str(trace), "--out", "-"]) == 2
        assert "row 3" in capsys.readouterr().err

    def test_wrong_header_exits_2(self, tmp_path, capsys):
        trace = tmp_path / "hdr.csv"
        trace.write_text("t,p\n0.0,0.1\n", encoding="utf-8")
        assert main(["fit", "--input", str(trace), "--out", "-"]) == 2
        assert "header" in capsys.readouterr().err

    def test_non_convergence_exits_3_but_writes_report(self, tmp_path):
        cfg, trace = self.simulate_trace(
            tmp_path,
            extra="[synth]\nnoise_sigma = 0.05\nseed = 2\n[fit]\nmax_iter = 1\ntol = 1e-15\n",
        )
        report_path = tmp_path / "fit.json"
        assert main(["fit", "--input", str(trace), "--config", cfg,
                     "--out", str(report_path)]) == 3
        report = json.loads(report_path.read_text())
        assert report["converged"] is False
        assert report["metrics"] is None


class TestSweep:
    DISTANCE_SWEEP = BASE + "[sweep]\nomega_z_hz = 213e3, 140e3, 105e3, 50e3\n"

    def test_distance_sweep_sorted_and_monotone(self, tmp_path):
        cfg = write_cfg(tmp_path, self.DISTANCE_SWEEP)
        out = tmp_path / "sweep.csv"
        assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
        _, rows = read_csv(out)
        distances = [row["d0_exact_m"] for row in rows]
        assert distances == sorted(distances)
        decays = [row["decay_time_model_s"] for row in rows]
        oscillations = [row["n_osc_model"] for row in rows]
        assert all(b > a for a, b in zip(decays, decays[1:]))
        assert all(b < a for a, b in zip(oscillations, oscillations[1:]))
        footer = [l for l in out.read_text().splitlines() if l.startswith("#")]
        assert any("decay_time_model increasing with d0: true" in l for l in footer)
        assert any("n_osc_model decreasing with d0: true" in l for l in footer)

    def test_radial_sweep_trends_json(self, tmp_path):
        cfg = write_cfg(
            tmp_path,
            "[trap]\nomega_y_hz = 2.87e6\nomega_z_hz = 140e3\n"
            "[sweep]\nomega_y_hz = 2.43e6, 2.64e6, 2.87e6, 3.11e6\n"
            "[output]\nformat = json\n",
        )
        out = tmp_path / "sweep.json"
        assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["trends"]["decay_time_model increasing with omega_y"] is True
        assert payload["trends"]["n_osc_model increasing with omega_y"] is True

    def test_single_point_matches_library_metrics(self, tmp_path):
        cfg = write_cfg(tmp_path, BASE)
        out = tmp_path / "single.csv"
        assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
        _, rows = read_csv(out)
        assert len(rows) == 1
        config = TrapConfig()
        spectrum = mode_spectrum(config)
        chi = kerr_chi(spectrum, config.omega_z, config.mass).chi
        mean_n = mean_stretch_occupation(
            rms_velocity(config.axial_temperature, config.mass),
            spectrum.omega_stretch, config.mass,
        )
        metrics = coherence_metrics(spectrum.kappa, chi, mean_n)
        assert rows[0]["decay_time_model_s"] == pytest.approx(metrics.decay_time, rel=1e-9)
        assert rows[0]["n_osc_model"] == pytest.approx(metrics.num_oscillations, rel=1e-9)
        assert math.isnan(rows[0]["decay_time_fit_s"])

    def test_fit_pipeline_columns(self, tmp_path):
        cfg = write_cfg(
            tmp_path,
            BASE + "[sweep]\nomega_z_hz = 213e3\nwith_fit = true\n"
                   "t_max_s = 0.05\npoints = 4096\n",
        )
        out = tmp_path / "fit_sweep.csv"
        assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
        _, rows = read_csv(out)
        assert math.isfinite(rows[0]["decay_time_fit_s"])
        assert math.isfinite(rows[0]["n_osc_fit"])
        assert rows[0]["decay_time_fit_s"] > 0

    def test_worker_pool_output_is_identical(self, tmp_path, monkeypatch):
        cfg = write_cfg(tmp_path, self.DISTANCE_SWEEP)
        serial, pooled = tmp_path / "serial.csv", tmp_path / "pooled.csv"
        assert main(["sweep", "--config", cfg, "--out", str(serial)]) == 0
        monkeypatch.setenv("PHONON_HOP_THREADS", "3")
        assert main(["sweep", "--config", cfg, "--out", str(pooled)]) == 0
        assert serial.read_bytes() == pooled.read_bytes()

    def test_bad_thread_env_exits_2(self, tmp_path, monkeypatch):
        cfg = write_cfg(tmp_path, self.DISTANCE_SWEEP)
        monkeypatch.setenv("PHONON_HOP_THREADS", "many")
        assert main(["sweep", "--config", cfg, "--out", "-"]) == 2


class TestVerify:
    def test_all_checks_pass(self, tmp_path, capsys):
        out = tmp_path / "verify.txt"
        assert main(["verify", "--out", str(out)]) == 0
        report = out.read_text()
        assert "OK: 5/5 checks passed" in report
        assert report.count("PASS") == 5
        assert capsys.readouterr().out == report

import json
from pathlib import Path

import numpy as np
import pytest
import yaml

from apvsim.cli import main
from apvsim.scenario import (
    ScenarioError,
    default_scenario,
    default_scenario_dict,
    load_scenario,
    parse_scenario,
)

REPO_SCENARIO = Path(__file__).resolve().parent.parent / "scenarios" / "default.yaml"


def write_scenario(tmp_path, data, name="scenario.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return path


@pytest.fixture
def scenario_dict():
    return default_scenario_dict(trials=4, seed=77)


class TestScenarioParsing:
    def test_default_parses(self):
        scenario = default_scenario()
        assert scenario.n_ions == 2
        assert scenario.eta_target == pytest.approx(2 * np.pi * 0.4, rel=1e-15)
        assert scenario.output_formats == ("csv", "json")

    def test_shipped_file_parses(self):
        scenario = load_scenario(REPO_SCENARIO)
        assert scenario.campaign.master_seed == 12345

    def test_unknown_key_named(self, scenario_dict):
        scenario_dict["fields"]["pnc_wave"]["frequency_THz"] = 146.0
        with pytest.raises(ScenarioError, match="fields.pnc_wave.frequency_THz"):
            parse_scenario(scenario_dict)

    def test_missing_key_named(self, scenario_dict):
        del scenario_dict["campaign"]["wait_time_s"]
        with pytest.raises(ScenarioError, match="campaign.wait_time_s"):
            parse_scenario(scenario_dict)

    def test_unknown_top_level_block(self, scenario_dict):
        scenario_dict["extras"] = {}
        with pytest.raises(ScenarioError, match="extras"):
            parse_scenario(scenario_dict)

    def test_schema_version_checked(self, scenario_dict):
        scenario_dict["schema_version"] = 2
        with pytest.raises(ScenarioError, match="schema_version"):
            parse_scenario(scenario_dict)

    def test_distribution_kind_checked(self, scenario_dict):
        scenario_dict["systematics"]["ellipticity"] = {"dist": "poisson", "value": 1.0}
        with pytest.raises(ScenarioError, match="ellipticity"):
            parse_scenario(scenario_dict)

    def test_distribution_param_mismatch(self, scenario_dict):
        scenario_dict["systematics"]["ellipticity"] = {"dist": "fixed", "low": 0.0}
        with pytest.raises(ScenarioError):
            parse_scenario(scenario_dict)

    def test_ellipticity_support_checked(self, scenario_dict):
        scenario_dict["systematics"]["ellipticity"] = {"dist": "uniform",
                                                       "low": 0.0, "high": 2.0}
        with pytest.raises(ScenarioError, match="ellipticity"):
            parse_scenario(scenario_dict)

    def test_non_numeric_rejected(self, scenario_dict):
        scenario_dict["campaign"]["wait_time_s"] = "fast"
        with pytest.raises(ScenarioError, match="wait_time_s"):
            parse_scenario(scenario_dict)

    def test_bad_vector_rejected(self, scenario_dict):
        scenario_dict["fields"]["quantization_axis"] = [0.0, 0.0]
        with pytest.raises(ScenarioError, match="quantization_axis"):
            parse_scenario(scenario_dict)

    def test_seed_override(self):
        scenario = default_scenario().with_overrides(seed=999)
        assert scenario.campaign.master_seed == 999


class TestCliShift:
    def test_default_scenario_table(self, tmp_path, scenario_dict):
        path = write_scenario(tmp_path, scenario_dict)
        out = tmp_path / "out"
        assert main(["shift", "--scenario", str(path), "--out", str(out)]) == 0
        table = json.loads((out / "shift.json").read_text())["per_ion"]
        assert len(table) == 2
        hz = [row["pnc_hz"] for row in table]
        assert hz[0] == pytest.approx(0.4, rel=1e-9)
        assert hz[1] == pytest.approx(-0.4, rel=1e-9)
        for row in table:
            assert row["pnc_rad_s"] == pytest.approx(row["pnc_numeric_rad_s"], rel=1e-10)
        assert (out / "shift.csv").exists()

    def test_in_phase_scenario_zero_column(self, tmp_path, scenario_dict):
        scenario_dict["fields"]["pnc_wave"]["temporal_phase_rad"] = 0.0
        scenario_dict["eta"]["target_shift_hz"] = 0.0
        path = write_scenario(tmp_path, scenario_dict)
        out = tmp_path / "out"
        assert main(["shift", "--scenario", str(path), "--out", str(out)]) == 0
        table = json.loads((out / "shift.json").read_text())["per_ion"]
        assert all(row["pnc_rad_s"] == 0.0 for row in table)

    def test_zero_shift_geometry_exit_3(self, tmp_path, scenario_dict):
        scenario_dict["fields"]["pnc_wave"]["temporal_phase_rad"] = 0.0
        path = write_scenario(tmp_path, scenario_dict)
        assert main(["shift", "--scenario", str(path), "--out", str(tmp_path / "o")]) == 3

    def test_frequency_mismatch_exit_3(self, tmp_path, scenario_dict):
        scenario_dict["fields"]["pnc_wave"]["wavelength_nm"] = 1026.0
        path = write_scenario(tmp_path, scenario_dict)
        assert main(["shift", "--scenario", str(path), "--out", str(tmp_path / "o")]) == 3

    def test_schema_violation_exit_2(self, tmp_path, scenario_dict):
        scenario_dict["fields"]["pnc_wave"]["amplitude_kV_per_m"] = 1.5
        path = write_scenario(tmp_path, scenario_dict)
        assert main(["shift", "--scenario", str(path), "--out", str(tmp_path / "o")]) == 2

    def test_missing_file_exit_2(self, tmp_path):
        assert main(["shift", "--scenario", str(tmp_path / "nope.yaml")]) == 2


class TestCliRamsey:
    def test_noiseless_rate_is_minus_2_delta(self, tmp_path, scenario_dict):
        scenario_dict["campaign"]["shots_per_point"] = 100000
        path = write_scenario(tmp_path, scenario_dict)
        out = tmp_path / "out"
        assert main(["ramsey", "--scenario", str(path), "--out", str(out)]) == 0
        fit = json.loads((out / "ramsey_fit.json").read_text())
        expected = -2 * 2 * np.pi * 0.4
        assert fit["rate_noiseless_rad_s"] == pytest.approx(expected, rel=1e-9)
        assert fit["rate_rad_s"] == pytest.approx(expected, rel=5e-2)
        fringe = (out / "ramsey_fringe.csv").read_text().splitlines()
        assert fringe[0].startswith("analysis_phase_rad,")
        assert len(fringe) == 1 + scenario_dict["campaign"]["phase_points"]

    def test_zero_wait_flat_max_parity(self, tmp_path, scenario_dict):
        scenario_dict["campaign"]["wait_time_s"] = 0.0
        path = write_scenario(tmp_path, scenario_dict)
        out = tmp_path / "out"
        assert main(["ramsey", "--scenario", str(path), "--out", str(out)]) == 0
        fit = json.loads((out / "ramsey_fit.json").read_text())
        assert fit["phase_noiseless_rad"] == pytest.approx(0.0, abs=1e-9)

    def test_degenerate_fit_exit_4(self, tmp_path, scenario_dict):
        scenario_dict["campaign"]["contrast"] = 1e-13
        path = write_scenario(tmp_path, scenario_dict)
        assert main(["ramsey", "--scenario", str(path),
                     "--out", str(tmp_path / "o")]) == 4

    def test_fixed_seed_rerun_identical(self, tmp_path, scenario_dict):
        path = write_scenario(tmp_path, scenario_dict)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["ramsey", "--scenario", str(path), "--out", str(out1)])
        main(["ramsey", "--scenario", str(path), "--out", str(out2)])
        assert (out1 / "ramsey_fringe.csv").read_bytes() == (out2 / "ramsey_fringe.csv").read_bytes()
        assert (out1 / "ramsey_fit.json").read_bytes() == (out2 / "ramsey_fit.json").read_bytes()


class TestCliMonteCarlo:
    def test_same_seed_byte_identical(self, tmp_path, scenario_dict):
        path = write_scenario(tmp_path, scenario_dict)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["montecarlo", "--scenario", str(path), "--out", str(out1)]) == 0
        assert main(["montecarlo", "--scenario", str(path), "--out", str(out2)]) == 0
        for name in ("montecarlo_report.json", "montecarlo_trials.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_seed_flag_changes_output(self, tmp_path, scenario_dict):
        path = write_scenario(tmp_path, scenario_dict)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["montecarlo", "--scenario", str(path), "--out", str(out1)])
        main(["montecarlo", "--scenario", str(path), "--out", str(out2), "--seed", "31"])
        assert ((out1 / "montecarlo_report.json").read_bytes()
                != (out2 / "montecarlo_report.json").read_bytes())

    def test_trials_one_zero_budget_zero_bias(self, tmp_path, scenario_dict):
        scenario_dict["campaign"]["trials"] = 1
        path = write_scenario(tmp_path, scenario_dict)
        out = tmp_path / "out"
        assert main(["montecarlo", "--scenario", str(path), "--out", str(out)]) == 0
        report = json.loads((out / "montecarlo_report.json").read_text())
        assert report["systematic_bias_rad_s"] == pytest.approx(0.0, abs=1e-12)

    def test_failure_threshold_exit_5(self, tmp_path, scenario_dict):
        scenario_dict["campaign"]["fit_failure_threshold"] = -0.5
        path = write_scenario(tmp_path, scenario_dict)
        assert main(["montecarlo", "--scenario", str(path),
                     "--out", str(tmp_path / "o")]) == 5


class TestCliSweep:
    def test_temporal_phase_sweep_follows_sine(self, tmp_path, scenario_dict):
        path = write_scenario(tmp_path, scenario_dict)
        out = tmp_path / "out"
        grid = np.linspace(0.1, 2 * np.pi, 8)
        assert main(["sweep", "--scenario", str(path), "--out", str(out),
                     "--param", "fields.pnc_wave.temporal_phase_rad",
                     "--values", ",".join(str(v) for v in grid)]) == 0
        rows = [line.split(",") for line
                in (out / "sweep.csv").read_text().splitlines()[1:]]
        shifts = {float(r[1]): float(r[3]) for r in rows if r[2] == "pnc_larmor_shift_hz"}
        # pc wave temporal phase is 0, so shift follows sin(phase); the
        # calibration target fixes the scale at each grid point, so compare shapes
        values = np.array([shifts[v] for v in grid])
        reference = values[0] / np.sin(grid[0]) * np.sin(grid)
        assert np.allclose(values, reference, rtol=1e-8)

    def test_ion_number_sweep_scales_projection(self, tmp_path, scenario_dict):
        path = write_scenario(tmp_path, scenario_dict)
        out = tmp_path / "out"
        assert main(["sweep", "--scenario", str(path), "--out", str(out),
                     "--param", "ions.count", "--values", "1,2,4"]) == 0
        rows = [line.split(",") for line
                in (out / "sweep.csv").read_text().splitlines()[1:]]
        proj = {float(r[1]): float(r[3]) for r in rows
                if r[2] == "projection_fractional_precision"}
        assert proj[2.0] == pytest.approx(proj[1.0] / 2, rel=1e-12)
        assert proj[4.0] == pytest.approx(proj[1.0] / 4, rel=1e-12)

    def test_empty_grid_exit_2(self, tmp_path, scenario_dict):
        path = write_scenario(tmp_path, scenario_dict)
        assert main(["sweep", "--scenario", str(path), "--out", str(tmp_path / "o"),
                     "--param", "ions.count", "--values", ""]) == 2

    def test_unknown_param_exit_2(self, tmp_path, scenario_dict):
        path = write_scenario(tmp_path, scenario_dict)
        assert main(["sweep", "--scenario", str(path), "--out", str(tmp_path / "o"),
                     "--param", "fields.pnc_wave.nope", "--values", "1.0"]) == 2


class TestCliCalibrate:
    def test_calibration_payload(self, tmp_path, scenario_dict):
        path = write_scenario(tmp_path, scenario_dict)
        out = tmp_path / "out"
        assert main(["calibrate", "--scenario", str(path), "--out", str(out)]) == 0
        payload = json.loads((out / "calibration.json").read_text())
        assert payload["achieved_shift_hz_numeric"] == pytest.approx(0.4, rel=1e-10)
        assert payload["eta_magnitude_e_a0"] > 0
        assert payload["scaling_projection"]["n_ions"] == 14


class TestOutputDirPrecedence:
    def test_env_var_used_when_no_flag(self, tmp_path, scenario_dict, monkeypatch):
        path = write_scenario(tmp_path, scenario_dict)
        env_dir = tmp_path / "from_env"
        monkeypatch.setenv("APVSIM_OUT_DIR", str(env_dir))
        assert main(["calibrate", "--scenario", str(path)]) == 0
        assert (env_dir / "calibration.json").exists()

    def test_flag_beats_env(self, tmp_path, scenario_dict, monkeypatch):
        path = write_scenario(tmp_path, scenario_dict)
        monkeypatch.setenv("APVSIM_OUT_DIR", str(tmp_path / "env"))
        flag_dir = tmp_path / "flag"
        assert main(["calibrate", "--scenario", str(path), "--out", str(flag_dir)]) == 0
        assert (flag_dir / "calibration.json").exists()
        assert not (tmp_path / "env").exists()

    def test_format_restriction(self, tmp_path, scenario_dict):
        path = write_scenario(tmp_path, scenario_dict)
        out = tmp_path / "out"
        assert main(["shift", "--scenario", str(path), "--out", str(out),
                     "--format", "json"]) == 0
        assert (out / "shift.json").exists()
        assert not (out / "shift.csv").exists()

"""Scenario-file ingestion: strict schema, explicit units in key names.

Scenario files are YAML with one fixed layout (``schema_version: 1``).
Every physical quantity carries its unit in the key name
(``amplitude_V_per_m``, ``wait_time_s``).  Parsing is strict: unknown keys
and missing required keys fail with a message naming the offending key.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
import yaml

from .constants import DEFAULT_OMEGA_OVER_RABI
from .fields import FieldConfiguration, Polarization, StandingWave
from .protocol import CampaignConfig, Distribution, SystematicsBudget

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    """Scenario file violates the schema."""


@dataclass(frozen=True)
class Scenario:
    """Parsed scenario: field geometry, ion placement, calibration target,
    systematics budget, campaign settings, output settings."""

    field_config: FieldConfiguration
    n_ions: int
    eta_target: float                 # rad/s
    omega_over_rabi: float
    budget: SystematicsBudget
    campaign: CampaignConfig
    output_dir: str
    output_formats: tuple
    raw: dict

    def with_overrides(self, seed=None, out_dir=None, formats=None) -> "Scenario":
        campaign = self.campaign
        if seed is not None:
            campaign = dataclasses.replace(campaign, master_seed=int(seed))
        return dataclasses.replace(
            self,
            campaign=campaign,
            output_dir=out_dir if out_dir is not None else self.output_dir,
            output_formats=tuple(formats) if formats is not None else self.output_formats,
        )


def _require_mapping(node, path):
    if not isinstance(node, dict):
        raise ScenarioError(f"{path}: expected a mapping")
    return node


def _check_keys(node, path, required, optional=()):
    for key in node:
        if key not in required and key not in optional:
            raise ScenarioError(f"unknown key {path}.{key}")
    for key in required:
        if key not in node:
            raise ScenarioError(f"missing key {path}.{key}")


def _number(node, path):
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise ScenarioError(f"{path}: expected a number")
    value = float(node)
    if not math.isfinite(value):
        raise ScenarioError(f"{path}: must be finite")
    return value


def _integer(node, path):
    if isinstance(node, bool) or not isinstance(node, int):
        raise ScenarioError(f"{path}: expected an integer")
    return node


def _vector3(node, path):
    if not isinstance(node, list) or len(node) != 3:
        raise ScenarioError(f"{path}: expected a list of 3 numbers")
    return np.array([_number(v, f"{path}[{i}]") for i, v in enumerate(node)])


def _distribution(node, path) -> Distribution:
    _require_mapping(node, path)
    if "dist" not in node:
        raise ScenarioError(f"missing key {path}.dist")
    kind = node["dist"]
    param_keys = {"fixed": ("value",), "uniform": ("low", "high"),
                  "normal": ("mean", "sigma")}
    if kind not in param_keys:
        raise ScenarioError(f"{path}.dist: unknown distribution {kind!r}")
    _check_keys(node, path, required=("dist",) + param_keys[kind])
    params = {k: _number(node[k], f"{path}.{k}") for k in param_keys[kind]}
    return Distribution(kind=kind, **params)


def _wave(node, path) -> StandingWave:
    _require_mapping(node, path)
    _check_keys(node, path,
                required=("wavelength_nm", "amplitude_V_per_m", "direction",
                          "polarization_re", "spatial_phase_rad", "temporal_phase_rad"),
                optional=("polarization_im", "misalignment_rad"))
    wavelength = _number(node["wavelength_nm"], f"{path}.wavelength_nm") * 1e-9
    direction = _vector3(node["direction"], f"{path}.direction")
    norm = np.linalg.norm(direction)
    if norm == 0:
        raise ScenarioError(f"{path}.direction: must be nonzero")
    pol = _vector3(node["polarization_re"], f"{path}.polarization_re").astype(complex)
    if "polarization_im" in node:
        pol = pol + 1j * _vector3(node["polarization_im"], f"{path}.polarization_im")
    mis = (_vector3(node["misalignment_rad"], f"{path}.misalignment_rad")
           if "misalignment_rad" in node else np.zeros(3))
    try:
        return StandingWave(
            wavevector=(2.0 * np.pi / wavelength) * direction / norm,
            amplitude=_number(node["amplitude_V_per_m"], f"{path}.amplitude_V_per_m"),
            polarization=Polarization(pol),
            spatial_phase=_number(node["spatial_phase_rad"], f"{path}.spatial_phase_rad"),
            temporal_phase=_number(node["temporal_phase_rad"], f"{path}.temporal_phase_rad"),
            misalignment=mis)
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def parse_scenario(data: dict) -> Scenario:
    root = _require_mapping(data, "scenario")
    _check_keys(root, "scenario",
                required=("schema_version", "fields", "ions", "eta",
                          "systematics", "campaign", "output"))
    if root["schema_version"] != SCHEMA_VERSION:
        raise ScenarioError(f"scenario.schema_version: expected {SCHEMA_VERSION}")

    f = _require_mapping(root["fields"], "fields")
    _check_keys(f, "fields", required=("pnc_wave", "pc_wave", "quantization_axis",
                                       "static_B_tesla"))
    axis = _vector3(f["quantization_axis"], "fields.quantization_axis")
    axis_norm = np.linalg.norm(axis)
    if axis_norm == 0:
        raise ScenarioError("fields.quantization_axis: must be nonzero")
    try:
        field_config = FieldConfiguration(
            pnc_wave=_wave(f["pnc_wave"], "fields.pnc_wave"),
            pc_wave=_wave(f["pc_wave"], "fields.pc_wave"),
            quantization_axis=axis / axis_norm,
            static_B=_vector3(f["static_B_tesla"], "fields.static_B_tesla"))
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc

    ions = _require_mapping(root["ions"], "ions")
    _check_keys(ions, "ions", required=("count", "placement"))
    count = _integer(ions["count"], "ions.count")
    if count < 1:
        raise ScenarioError("ions.count: must be >= 1")
    if ions["placement"] != "successive_pc_nodes":
        raise ScenarioError("ions.placement: only 'successive_pc_nodes' is supported")

    eta = _require_mapping(root["eta"], "eta")
    _check_keys(eta, "eta", required=("target_shift_hz",), optional=("omega_over_rabi",))
    target = 2.0 * np.pi * _number(eta["target_shift_hz"], "eta.target_shift_hz")
    omega_over_rabi = (_number(eta["omega_over_rabi"], "eta.omega_over_rabi")
                       if "omega_over_rabi" in eta else DEFAULT_OMEGA_OVER_RABI)

    sysb = _require_mapping(root["systematics"], "systematics")
    dist_keys = ("ellipticity", "misalignment_angle_rad", "b_gradient_T_per_m",
                 "stray_offset_rad_s", "stray_gradient_rad_s_per_m",
                 "swap_phase_error_rad")
    _check_keys(sysb, "systematics", required=dist_keys, optional=("coupling_ratio",))
    ell = _distribution(sysb["ellipticity"], "systematics.ellipticity")
    if not ell.support_within(0.0, 1.0) and ell.kind != "normal":
        raise ScenarioError("systematics.ellipticity: support must lie within [0, 1]")
    budget = SystematicsBudget(
        ellipticity=ell,
        misalignment_angle=_distribution(sysb["misalignment_angle_rad"],
                                         "systematics.misalignment_angle_rad"),
        b_gradient=_distribution(sysb["b_gradient_T_per_m"],
                                 "systematics.b_gradient_T_per_m"),
        stray_offset=_distribution(sysb["stray_offset_rad_s"],
                                   "systematics.stray_offset_rad_s"),
        stray_gradient=_distribution(sysb["stray_gradient_rad_s_per_m"],
                                     "systematics.stray_gradient_rad_s_per_m"),
        swap_phase_error=_distribution(sysb["swap_phase_error_rad"],
                                       "systematics.swap_phase_error_rad"),
        coupling_ratio=(_number(sysb["coupling_ratio"], "systematics.coupling_ratio")
                        if "coupling_ratio" in sysb else 1e7))

    camp = _require_mapping(root["campaign"], "campaign")
    _check_keys(camp, "campaign",
                required=("wait_time_s", "shots_per_point", "phase_points",
                          "trials", "master_seed"),
                optional=("cycle_time_s", "total_time_s", "contrast",
                          "fit_failure_threshold"))
    try:
        campaign = CampaignConfig(
            field_config=field_config,
            n_ions=count,
            eta_target=target,
            wait_time=_number(camp["wait_time_s"], "campaign.wait_time_s"),
            shots_per_point=_integer(camp["shots_per_point"], "campaign.shots_per_point"),
            phase_points=_integer(camp["phase_points"], "campaign.phase_points"),
            trials=_integer(camp["trials"], "campaign.trials"),
            master_seed=_integer(camp["master_seed"], "campaign.master_seed"),
            cycle_time=_number(camp.get("cycle_time_s", 1.0), "campaign.cycle_time_s"),
            total_time=_number(camp.get("total_time_s", 86400.0), "campaign.total_time_s"),
            contrast=_number(camp.get("contrast", 1.0), "campaign.contrast"),
            fit_failure_threshold=_number(camp.get("fit_failure_threshold", 0.05),
                                          "campaign.fit_failure_threshold"))
    except ValueError as exc:
        raise ScenarioError(f"campaign: {exc}") from exc

    out = _require_mapping(root["output"], "output")
    _check_keys(out, "output", required=("dir", "formats"))
    formats = out["formats"]
    if (not isinstance(formats, list) or not formats
            or any(fmt not in ("csv", "json") for fmt in formats)):
        raise ScenarioError("output.formats: expected a non-empty list of 'csv'/'json'")
    if not isinstance(out["dir"], str):
        raise ScenarioError("output.dir: expected a string")

    return Scenario(field_config=field_config, n_ions=count, eta_target=target,
                    omega_over_rabi=omega_over_rabi, budget=budget, campaign=campaign,
                    output_dir=out["dir"], output_formats=tuple(formats), raw=root)


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ScenarioError(f"cannot parse scenario file: {exc}") from exc
    return parse_scenario(data)


def default_scenario_dict(n_ions: int = 2, trials: int = 100, seed: int = 12345) -> dict:
    """Complete scenario mapping for the reference crossed-wave geometry."""
    return {
        "schema_version": SCHEMA_VERSION,
        "fields": {
            "pnc_wave": {
                "wavelength_nm": 2052.0,
                "amplitude_V_per_m": 1.5e6,
                "direction": [0.0, 0.0, 1.0],
                "polarization_re": [1.0, 0.0, 0.0],
                "spatial_phase_rad": 0.0,
                "temporal_phase_rad": float(np.pi / 2),
            },
            "pc_wave": {
                "wavelength_nm": 2052.0,
                "amplitude_V_per_m": 1.0e6,
                "direction": [1.0, 0.0, 0.0],
                "polarization_re": [0.0, 0.0, 1.0],
                "spatial_phase_rad": float(np.pi / 2),
                "temporal_phase_rad": 0.0,
            },
            "quantization_axis": [0.0, 0.0, 1.0],
            "static_B_tesla": [0.0, 0.0, 5.0e-4],
        },
        "ions": {"count": n_ions, "placement": "successive_pc_nodes"},
        "eta": {"target_shift_hz": 0.4, "omega_over_rabi": DEFAULT_OMEGA_OVER_RABI},
        "systematics": {
            "coupling_ratio": 1e7,
            "ellipticity": {"dist": "fixed", "value": 0.0},
            "misalignment_angle_rad": {"dist": "fixed", "value": 0.0},
            "b_gradient_T_per_m": {"dist": "fixed", "value": 0.0},
            "stray_offset_rad_s": {"dist": "fixed", "value": 0.0},
            "stray_gradient_rad_s_per_m": {"dist": "fixed", "value": 0.0},
            "swap_phase_error_rad": {"dist": "fixed", "value": 0.0},
        },
        "campaign": {
            "wait_time_s": 0.125,
            "shots_per_point": 1000,
            "phase_points": 16,
            "trials": trials,
            "master_seed": seed,
            "cycle_time_s": 1.0,
            "total_time_s": 86400.0,
            "contrast": 1.0,
            "fit_failure_threshold": 0.05,
        },
        "output": {"dir": "out", "formats": ["csv", "json"]},
    }


def default_scenario(**kwargs) -> Scenario:
    return parse_scenario(default_scenario_dict(**kwargs))

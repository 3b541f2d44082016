"""Command-line front end.

Subcommands: shift | ramsey | montecarlo | sweep | calibrate.
Common flags: --scenario PATH, --seed N, --out DIR, --format csv|json.
Output directory precedence: --out, then $APVSIM_OUT_DIR, then the
scenario's output.dir.  Exit codes: 0 ok, 2 schema/usage violation,
3 degenerate physics configuration (frequency mismatch, zero-shift
geometry, degenerate segment), 4 fringe fit failure, 5 Monte-Carlo
fit-failure fraction above threshold.  All outputs are reproducible from
the scenario file and master seed alone (no timestamps).
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
from pathlib import Path

import numpy as np

from .fields import DegenerateSegment, sites_at_successive_nodes
from .protocol import (
    effective_fields,
    precision_projection,
    run_montecarlo,
    scaling_projection_report,
    trial_rng,
)
from .scenario import Scenario, ScenarioError, load_scenario, parse_scenario
from .shifts import (
    FrequencyMismatch,
    ZeroShiftGeometry,
    build_budget,
    calibrate_eta,
    larmor_shift,
    pnc_shift_numeric,
)
from .spins import FitDegenerate, extract_phase, ramsey_sequence, rate_convention_report

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_DEGENERATE = 3
EXIT_FIT = 4
EXIT_MC_FAILURES = 5


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, header, rows):
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _out_dir(scenario: Scenario, args) -> Path:
    out = args.out or os.environ.get("APVSIM_OUT_DIR") or scenario.output_dir
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _formats(scenario: Scenario, args):
    return (args.format,) if args.format else scenario.output_formats


def _calibrated(scenario: Scenario):
    sites = sites_at_successive_nodes(scenario.field_config, scenario.n_ions)
    eta = calibrate_eta(scenario.field_config, sites[0].position,
                        scenario.eta_target, scenario.omega_over_rabi)
    return sites, eta


def cmd_shift(scenario: Scenario, args) -> int:
    out = _out_dir(scenario, args)
    sites, eta = _calibrated(scenario)
    values = scenario.budget.sample(trial_rng(scenario.campaign.master_seed, 0))
    axis = scenario.field_config.quantization_axis
    rows, records = [], []
    for site in sites:
        budget = build_budget(scenario.field_config, site, eta, values,
                              pnc_reference=abs(scenario.eta_target))
        numeric = larmor_shift(
            pnc_shift_numeric(scenario.field_config, site.position, eta), axis)
        rec = {
            "ion_index": site.index,
            "node_parity": site.node_parity,
            "position_x_m": float(site.position[0]),
            "pnc_rad_s": budget.pnc,
            "pnc_numeric_rad_s": numeric,
            "pnc_hz": budget.pnc / (2.0 * np.pi),
            "zeeman_rad_s": budget.zeeman,
            "quad_systematic_rad_s": budget.quad_systematic,
            "stray_rad_s": budget.stray,
            "total_rad_s": budget.total,
        }
        records.append(rec)
        rows.append([rec[k] for k in records[0]])
    formats = _formats(scenario, args)
    if "csv" in formats:
        write_csv(out / "shift.csv", list(records[0]), rows)
    if "json" in formats:
        write_json(out / "shift.json", {"per_ion": records})
    print(f"shift table for {len(sites)} ions written to {out}")
    return EXIT_OK


def cmd_ramsey(scenario: Scenario, args) -> int:
    out = _out_dir(scenario, args)
    sites, eta = _calibrated(scenario)
    camp = scenario.campaign
    rng = trial_rng(camp.master_seed, 0)
    values = scenario.budget.sample(rng)
    budgets = [build_budget(scenario.field_config, s, eta, values,
                            pnc_reference=abs(scenario.eta_target)) for s in sites]
    fields = effective_fields(budgets)
    outcomes = [ramsey_sequence(fields, camp.wait_time, phi_a,
                                camp.shots_per_point, camp.contrast, seed=rng)
                for phi_a in camp.analysis_phases]
    phi, sigma = extract_phase(outcomes, camp.n_ions)
    phi_exact, _ = extract_phase(outcomes, camp.n_ions, use_expectation=True)
    rate = (phi / camp.wait_time) if camp.wait_time > 0 else None
    rate_exact = (phi_exact / camp.wait_time) if camp.wait_time > 0 else None
    fit = {
        "phase_rad": phi,
        "phase_sigma_rad": sigma,
        "phase_noiseless_rad": phi_exact,
        "rate_rad_s": rate,
        "rate_noiseless_rad_s": rate_exact,
        "expected_branch_rate_rad_s": -camp.n_ions * scenario.eta_target,
        "wait_time_s": camp.wait_time,
        "n_ions": camp.n_ions,
        "convention": rate_convention_report(camp.n_ions, scenario.eta_target)["note"],
    }
    formats = _formats(scenario, args)
    if "csv" in formats:
        write_csv(out / "ramsey_fringe.csv",
                  ["analysis_phase_rad", "parity_expectation", "empirical_parity",
                   "even_counts", "odd_counts"],
                  [[o.analysis_phase, o.parity_expectation, o.empirical_parity,
                    o.shot_counts[0], o.shot_counts[1]] for o in outcomes])
    if "json" in formats:
        write_json(out / "ramsey_fit.json", fit)
    print(f"ramsey fringe ({len(outcomes)} points) written to {out}; "
          f"fitted phase {phi:.6g} rad")
    return EXIT_OK


def cmd_montecarlo(scenario: Scenario, args) -> int:
    out = _out_dir(scenario, args)
    report = run_montecarlo(scenario.campaign, scenario.budget)
    formats = _formats(scenario, args)
    if "json" in formats:
        write_json(out / "montecarlo_report.json", report.to_dict())
    if "csv" in formats:
        per = report.per_trial
        n = len(per["delta_estimate_rad_s"])
        write_csv(out / "montecarlo_trials.csv",
                  ["trial", "delta_estimate_rad_s", "noiseless_estimate_rad_s",
                   "projection_sigma_rad_s", "noiseless_residual_rad_s"],
                  [[i, per["delta_estimate_rad_s"][i], per["noiseless_estimate_rad_s"][i],
                    per["projection_sigma_rad_s"][i], per["noiseless_residual_rad_s"][i]]
                   for i in range(n)])
    print(f"montecarlo: fractional precision {report.fractional_precision:.3e}, "
          f"reach {report.reach_tev:.1f} TeV, {report.fit_failures} fit failures")
    if report.fit_failures / report.trials > scenario.campaign.fit_failure_threshold:
        print(f"fit-failure fraction exceeds threshold "
              f"{scenario.campaign.fit_failure_threshold}", file=sys.stderr)
        return EXIT_MC_FAILURES
    return EXIT_OK


def _set_path(mapping: dict, dotted: str, value):
    keys = dotted.split(".")
    node = mapping
    for key in keys[:-1]:
        if not isinstance(node, dict) or key not in node:
            raise ScenarioError(f"unknown parameter path {dotted}")
        node = node[key]
    leaf = keys[-1]
    if not isinstance(node, dict) or leaf not in node:
        raise ScenarioError(f"unknown parameter path {dotted}")
    node[leaf] = int(value) if isinstance(node[leaf], int) else float(value)


def cmd_sweep(scenario: Scenario, args) -> int:
    out = _out_dir(scenario, args)
    if args.values:
        grid = [float(v) for v in args.values.split(",") if v.strip() != ""]
    else:
        grid = list(np.linspace(args.start, args.stop, args.num)) if args.num else []
    if not grid:
        raise ScenarioError("sweep grid is empty")
    # the coupling is calibrated once on the base scenario, then held fixed,
    # so geometry sweeps show the physical shift dependence
    _, eta = _calibrated(scenario)
    rows = []
    for value in grid:
        raw = copy.deepcopy(scenario.raw)
        _set_path(raw, args.param, value)
        swept = parse_scenario(raw).with_overrides(seed=scenario.campaign.master_seed)
        sites = sites_at_successive_nodes(swept.field_config, swept.n_ions)
        shift_hz = larmor_shift(
            pnc_shift_numeric(swept.field_config, sites[0].position, eta),
            swept.field_config.quantization_axis) / (2.0 * np.pi)
        camp = swept.campaign
        projection = precision_projection(camp.n_ions, abs(swept.eta_target),
                                          camp.contrast, camp.cycle_time,
                                          camp.total_time)
        rows.append([args.param, value, "pnc_larmor_shift_hz", shift_hz])
        rows.append([args.param, value, "projection_fractional_precision", projection])
    write_csv(out / "sweep.csv", ["parameter", "value", "metric", "result"], rows)
    print(f"sweep over {args.param} ({len(grid)} points) written to {out}")
    return EXIT_OK


def cmd_calibrate(scenario: Scenario, args) -> int:
    out = _out_dir(scenario, args)
    sites, eta = _calibrated(scenario)
    achieved = larmor_shift(
        pnc_shift_numeric(scenario.field_config, sites[0].position, eta),
        scenario.field_config.quantization_axis)
    payload = {
        "eta_magnitude_e_a0": eta.eta_magnitude,
        "omega_over_rabi": eta.omega_over_rabi,
        "coupling": eta.coupling,
        "target_shift_hz": scenario.eta_target / (2.0 * np.pi),
        "achieved_shift_hz_numeric": achieved / (2.0 * np.pi),
        "calibration_position_m": [float(x) for x in sites[0].position],
        "scaling_projection": scaling_projection_report(),
    }
    write_json(out / "calibration.json", payload)
    print(f"calibration written to {out}/calibration.json "
          f"(eta_magnitude {eta.eta_magnitude:.6e} e*a0)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="apvsim", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("shift", cmd_shift), ("ramsey", cmd_ramsey),
                     ("montecarlo", cmd_montecarlo), ("sweep", cmd_sweep),
                     ("calibrate", cmd_calibrate)):
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=True, help="scenario YAML file")
        p.add_argument("--seed", type=int, default=None, help="override master seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default=None,
                       help="restrict output to one format")
        p.set_defaults(fn=fn)
        if name == "sweep":
            p.add_argument("--param", required=True,
                           help="dotted scenario path, e.g. fields.pnc_wave.temporal_phase_rad")
            p.add_argument("--values", default=None, help="comma-separated grid values")
            p.add_argument("--start", type=float, default=0.0)
            p.add_argument("--stop", type=float, default=0.0)
            p.add_argument("--num", type=int, default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = load_scenario(args.scenario).with_overrides(seed=args.seed)
        return args.fn(scenario, args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (FrequencyMismatch, ZeroShiftGeometry, DegenerateSegment) as exc:
        print(f"degenerate configuration: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except FitDegenerate as exc:
        print(f"fit failure: {exc}", file=sys.stderr)
        return EXIT_FIT
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())

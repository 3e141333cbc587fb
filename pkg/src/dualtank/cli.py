"""Command-line surface: design runs, replays, comparisons, scenario linting.

Verbs: ``rccd``, ``olccd``, ``replay``, ``compare``, ``validate``. Outputs
are files in the ``--out`` directory: a DesignResult JSON, a trajectory CSV,
SVG plots of the inputs and the heater temperature with its constraint
lines, and a bounds/optima text report.

Exit codes: 0 success (and feasible), 2 infeasible design, 3 replay
violations present, 1 anything else.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import DualTankError, NoFeasiblePoint, ScenarioError
from .olccd import open_loop_replay, transcribe_and_solve
from .profiles import PERTURB_MODES, perturb_profile
from .rccd import RolloutResult, closed_loop_replay, outer_optimize
from .report import compare_report, design_table, violation_summary
from .results import (
    DesignResult,
    load_design,
    load_trajectory,
    save_design,
    save_trajectory,
)
from .scenario import Scenario, load_scenario, olccd_bounds, olccd_initial
from .svgplot import plot_lines

log = logging.getLogger("dualtank")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_VIOLATIONS = 3


def _write_plots(out_dir: Path, csv_name: str, tag: str, scenario: Scenario) -> None:
    """Render the input and heater-temperature plots from a trajectory CSV."""
    cols = load_trajectory(out_dir / csv_name)
    t = cols["t"]
    plot_lines(
        out_dir / f"inputs_{tag}.svg",
        [("mdot_f", t, cols["mdot_f"]), ("mdot_r", t, cols["mdot_r"])],
        title=f"Control inputs ({tag})",
        xlabel="time (s)",
        ylabel="flow (kg/s)",
    )
    th_hi = scenario.rmpc.X_box.upper[1]
    th_lo = scenario.rmpc.X_box.lower[1]
    hlines = [(v, f"T_h bound {v:g}") for v in (th_lo, th_hi) if np.isfinite(v)]
    plot_lines(
        out_dir / f"temperature_{tag}.svg",
        [("T_h", t, cols["T_h"])],
        title=f"Heater temperature ({tag})",
        xlabel="time (s)",
        ylabel="T_h (degC)",
        hlines=hlines,
    )


def _emit_design(
    out_dir: Path,
    tag: str,
    scenario: Scenario,
    design_result: DesignResult,
    rollout: RolloutResult,
) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_name = f"trajectory_{tag}.csv"
    save_trajectory(out_dir / csv_name, rollout, scenario.profile.samples, scenario.tau_s)
    save_design(out_dir / f"design_{tag}.json", design_result)
    _write_plots(out_dir, csv_name, tag, scenario)
    arr = np.concatenate(
        [design_result.params.core(), design_result.x0, design_result.u0]
    )
    label = "rCCD" if tag == "rccd" else "OL CCD"
    table = design_table(scenario.design_bounds, {label: arr}, {label: design_result.J_sys})
    (out_dir / f"report_{tag}.txt").write_text(table)
    log.info("wrote design_%s.json, %s, plots, report_%s.txt in %s", tag, csv_name, tag, out_dir)


def run_rccd(scenario: Scenario, out_dir: Path) -> int:
    try:
        result = outer_optimize(
            scenario.initial_design,
            scenario.design_bounds,
            scenario.profile,
            scenario.rmpc,
            scenario.lqr,
            scenario.n_sub,
            scenario.search,
        )
    except NoFeasiblePoint as exc:
        log.error("rccd infeasible: %s (first_infeasible_k=%s)", exc, exc.first_infeasible_k)
        return EXIT_INFEASIBLE
    sch = result.rollout.schedules
    dr = DesignResult(
        algorithm="rccd",
        params=result.design.params,
        x0=result.design.x0,
        u0=result.design.u0,
        J_sys=result.J_sys,
        feasible=True,
        tau_s=scenario.tau_s,
        n_t=scenario.n_t,
        feedforward=sch.C_star,
        gains=sch.K_star,
        lin_x=sch.lin_x,
        lin_u=sch.lin_u,
        trajectory_csv="trajectory_rccd.csv",
    )
    _emit_design(out_dir, "rccd", scenario, dr, result.rollout)
    log.info("rccd: J_sys* = %.4f kg after %d rollouts", result.J_sys, result.evaluations)
    return EXIT_OK


def run_olccd(scenario: Scenario, out_dir: Path) -> int:
    try:
        result = transcribe_and_solve(
            _ol_initial(scenario),
            olccd_bounds(scenario),
            scenario.profile,
            scenario.rmpc,
            scenario.olccd,
            scenario.n_sub,
        )
    except NoFeasiblePoint as exc:
        log.error("olccd infeasible: %s", exc)
        return EXIT_INFEASIBLE
    dr = DesignResult(
        algorithm="olccd",
        params=result.design.params,
        x0=result.design.x0,
        u0=result.design.U[0],
        J_sys=result.J_sys,
        feasible=True,
        tau_s=scenario.tau_s,
        n_t=scenario.n_t,
        feedforward=result.design.U,
        trajectory_csv="trajectory_olccd.csv",
    )
    _emit_design(out_dir, "olccd", scenario, dr, result.rollout)
    log.info("olccd: J_sys* = %.4f kg, max violation %.3g", result.J_sys, result.max_violation)
    return EXIT_OK


def _ol_initial(scenario: Scenario):
    from .olccd import TranscriptionVector

    arr = olccd_initial(scenario)
    return TranscriptionVector.from_array(arr, scenario.n_t, scenario.c_p)


def run_replay(design_path: Path, scenario: Scenario, perturb: str, seed, out_dir: Path) -> int:
    design = load_design(design_path)
    if design.n_t != scenario.n_t:
        log.error("design has %d steps but scenario needs %d", design.n_t, scenario.n_t)
        return EXIT_ERROR
    actual = perturb_profile(
        scenario.profile,
        scenario.rmpc.W_box,
        perturb,
        seed=scenario.seed if seed is None else seed,
    )
    if design.gains is not None:
        rollout = closed_loop_replay(
            design.schedules(), design.x0, actual, design.params, scenario.rmpc, scenario.n_sub
        )
    else:
        rollout = open_loop_replay(
            design.feedforward, design.x0, actual, design.params, scenario.rmpc, scenario.n_sub
        )
    out_dir.mkdir(parents=True, exist_ok=True)
    tag = f"replay_{design.algorithm}_{perturb}"
    csv_name = f"trajectory_{tag}.csv"
    save_trajectory(out_dir / csv_name, rollout, actual.samples, scenario.tau_s)
    _write_plots(out_dir, csv_name, tag, scenario)
    _overlay_plot(out_dir, csv_name, design, design_path, tag, scenario)
    summary = violation_summary(rollout, f"{design.algorithm} under {perturb}")
    (out_dir / f"report_{tag}.txt").write_text(summary)
    log.info("%s", summary.rstrip())
    return EXIT_OK if rollout.feasible else EXIT_VIOLATIONS


def _overlay_plot(out_dir, csv_name, design, design_path, tag, scenario):
    """Overlay the replayed T_h on the design-time T_h when that CSV exists."""
    series = []
    if design.trajectory_csv:
        ref = Path(design_path).parent / design.trajectory_csv
        if ref.exists():
            ref_cols = load_trajectory(ref)
            series.append(("T_h design", ref_cols["t"], ref_cols["T_h"]))
    cols = load_trajectory(out_dir / csv_name)
    series.append(("T_h actual", cols["t"], cols["T_h"]))
    th_hi = scenario.rmpc.X_box.upper[1]
    th_lo = scenario.rmpc.X_box.lower[1]
    hlines = [(v, f"T_h bound {v:g}") for v in (th_lo, th_hi) if np.isfinite(v)]
    plot_lines(
        out_dir / f"overlay_{tag}.svg",
        series,
        title=f"Replay vs design ({tag})",
        xlabel="time (s)",
        ylabel="T_h (degC)",
        hlines=hlines,
    )


def run_compare(scenario: Scenario, out_dir: Path) -> int:
    code_r = run_rccd(scenario, out_dir)
    code_o = run_olccd(scenario, out_dir)
    if code_r != EXIT_OK or code_o != EXIT_OK:
        return EXIT_INFEASIBLE

    summaries = []
    columns = {}
    J_values = {}
    for tag, label in (("olccd", "OL CCD"), ("rccd", "rCCD")):
        dr = load_design(out_dir / f"design_{tag}.json")
        columns[label] = np.concatenate([dr.params.core(), dr.x0, dr.u0])
        J_values[label] = dr.J_sys
        code = run_replay(out_dir / f"design_{tag}.json", scenario, "none", None, out_dir)
        report_path = out_dir / f"report_replay_{tag}_none.txt"
        summaries.append(report_path.read_text().rstrip())
        if code == EXIT_VIOLATIONS:
            summaries[-1] += "  [violations]"
    text = compare_report(scenario.design_bounds, columns, J_values, summaries)
    (out_dir / "compare_report.txt").write_text(text)
    log.info("compare report written to %s", out_dir / "compare_report.txt")
    return EXIT_OK


def run_validate(scenario_path: Path) -> int:
    scenario = load_scenario(scenario_path)
    print(
        f"scenario {scenario.name!r}: n_t={scenario.n_t}, tau_s={scenario.tau_s:g} s, "
        f"N_p={scenario.rmpc.N_p}, seed={scenario.seed}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dualtank",
        description="Co-design studies for the dual-tank thermal management plant.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, design=False, perturb=False):
        p.add_argument("--scenario", required=True, type=Path, help="scenario JSON file")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        if design:
            p.add_argument("--design", required=True, type=Path, help="DesignResult JSON")
        if perturb:
            p.add_argument(
                "--perturb",
                choices=PERTURB_MODES,
                default="none",
                help="disturbance perturbation applied before replay",
            )

    add_common(sub.add_parser("rccd", help="run the robust co-design"))
    add_common(sub.add_parser("olccd", help="run the open-loop baseline"))
    add_common(sub.add_parser("replay", help="replay a stored design"), design=True, perturb=True)
    add_common(sub.add_parser("compare", help="run both algorithms and compare"))
    v = sub.add_parser("validate", help="lint a scenario file")
    v.add_argument("--scenario", required=True, type=Path)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not logging.getLogger().handlers:
        logging.basicConfig(
            level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
        )
    try:
        if args.command == "validate":
            return run_validate(args.scenario)
        scenario = load_scenario(args.scenario)
        if args.command == "rccd":
            return run_rccd(scenario, args.out)
        if args.command == "olccd":
            return run_olccd(scenario, args.out)
        if args.command == "replay":
            return run_replay(args.design, scenario, args.perturb, args.seed, args.out)
        if args.command == "compare":
            return run_compare(scenario, args.out)
        raise AssertionError(f"unhandled command {args.command}")
    except ScenarioError as exc:
        log.error("%s", exc)
        return EXIT_ERROR
    except DualTankError as exc:
        log.error("%s", exc)
        return EXIT_ERROR
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())

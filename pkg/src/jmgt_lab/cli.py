"""Experiment drivers and the `jmgt-lab` command line interface.

Every run writes CSV artifacts into the output directory: ``trajectory.csv``
(coefficient series), ``energy.csv`` (energy records) and ``report.csv``
(run-specific summary table).  Exit codes: 0 success, 1 config error,
2 solver failure.  Outputs are byte-deterministic for a fixed config; sweep
members are solved in sweep order.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .assembly import constant_field
from .basis import build_basis
from .config import ExperimentConfig, parse_config
from .energy import (
    AuditMode,
    BoundaryFlux,
    EnergyRecord,
    audit_estimate,
    boundary_flux,
    data_norms,
    energy_higher,
    energy_lower,
    trapezoid_total,
)
from .exceptions import ConfigFileError, NonDegeneracyViolated, SolverFailure
from .integrate import Trajectory, solve_smgt_linear, solve_westervelt_linearized
from .model import BoundaryKind
from .nonlinear import NonlinearVariant, PicardReport, solve_jmgt, solve_westervelt_nonlinear

__all__ = ["main", "run", "limit_study", "mms_study", "LimitRow", "LimitStudyResult", "MmsRow"]

SUBCOMMANDS = (
    "solve-linear",
    "solve-jmgt",
    "solve-relaxed",
    "solve-westervelt",
    "limit-study",
    "energy-audit",
    "mms",
)

#: Signal-derivative order carried in the data-norm bundles of the reports.
MAX_DATA_ORDER = 4


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(cell) for cell in row])


def _write_trajectory(path: Path, traj: Trajectory) -> None:
    n = traj.n_modes
    header = (
        ["t"]
        + [f"xi_{i}" for i in range(n)]
        + [f"dxi_{i}" for i in range(n)]
        + [f"ddxi_{i}" for i in range(n)]
    )
    rows = [
        [float(traj.times[m]), *traj.coeff[m], *traj.coeff_t[m], *traj.coeff_tt[m]]
        for m in range(len(traj.times))
    ]
    _write_csv(path, header, rows)


def _write_energy(
    path: Path,
    lower: EnergyRecord,
    higher: EnergyRecord,
    flux: BoundaryFlux | None = None,
) -> None:
    header = ["t", "low", "dual_accum", "tt_accum", "high", "tt_h1_accum", "ttt_l2_accum"]
    columns = [
        lower.times,
        lower.low,
        lower.dual_accum,
        lower.tt_accum,
        higher.high,
        higher.tt_h1_accum,
        higher.ttt_l2_accum,
    ]
    if flux is not None and not flux.empty:
        header += ["flux_tt_accum", "flux_t_max"]
        columns += [flux.acceleration_flux_accum, flux.velocity_flux_max]
    rows = [[float(col[m]) for col in columns] for m in range(len(lower.times))]
    _write_csv(path, header, rows)


@dataclass(frozen=True)
class LimitRow:
    """One vanishing-relaxation-time run compared against the reference."""

    tau: float
    velocity_error: float
    energy_error: float
    picard_iterations: int
    degeneracy_margin: float


@dataclass
class LimitStudyResult:
    """Sweep table plus metadata of the shared second-order reference run."""

    rows: list[LimitRow]
    reference_iterations: int
    reference_margin: float

    def __post_init__(self):
        taus = [row.tau for row in self.rows]
        if any(b >= a for a, b in zip(taus, taus[1:])):
            raise ValueError("tau column must be strictly decreasing")
        for row in self.rows:
            if not (math.isfinite(row.velocity_error) and math.isfinite(row.energy_error)):
                raise ValueError(f"non-finite error at tau = {row.tau}")


@dataclass(frozen=True)
class MmsRow:
    solver: str
    dt: float
    error: float
    observed_order: float | None


def limit_study(config: ExperimentConfig) -> tuple[LimitStudyResult, Trajectory]:
    """Compare third-order solutions against the second-order limit.

    Solves the nonlinear second-order reference once, then one third-order
    run per sweep entry with the damping coefficient recomputed from tau.
    All runs share the basis, grid, and fixed-point tolerances.  A failing
    member aborts the study with that run's diagnosis.
    """
    if config.tau_sweep is None:
        raise ConfigFileError(["limit-study requires a tau_sweep entry in [experiment]"])
    basis = build_basis(config.length, config.solver.n_modes)
    reference, ref_report = solve_westervelt_nonlinear(
        config.params, basis, None, config.signal, config.solver, config.bc
    )
    lam = basis.eigenvalues
    rows: list[LimitRow] = []
    for tau in config.tau_sweep:
        params_tau = replace(config.params, tau=tau)
        traj, report = solve_jmgt(params_tau, basis, None, config.signal, config.solver, config.bc)
        diff_t = traj.coeff_t - reference.coeff_t
        diff_tt = traj.coeff_tt - reference.coeff_tt
        velocity_error = float(np.sqrt((diff_t**2).sum(axis=1)).max())
        sq_tt_h1 = np.sum((1.0 + lam) * diff_tt**2, axis=1)
        sq_lap_t = np.sum(lam**2 * diff_t**2, axis=1)
        energy_error = float(np.sqrt(trapezoid_total(sq_tt_h1, traj.dt) + sq_lap_t.max()))
        rows.append(
            LimitRow(
                tau=tau,
                velocity_error=velocity_error,
                energy_error=energy_error,
                picard_iterations=report.iterations,
                degeneracy_margin=report.degeneracy_margin,
            )
        )
    result = LimitStudyResult(
        rows=rows,
        reference_iterations=ref_report.iterations,
        reference_margin=ref_report.degeneracy_margin,
    )
    return result, reference


def mms_study(config: ExperimentConfig) -> tuple[list[MmsRow], Trajectory]:
    """Manufactured-solution convergence table for both solvers.

    The exact solution is t^3 * cos(pi x / L), a single basis mode, so the
    spatial error vanishes and the table isolates the temporal order.  dt is
    halved ``mms_levels - 1`` times starting from the configured step.
    """
    if config.solver.n_modes < 2:
        raise ConfigFileError(["mms requires n_modes >= 2"])
    basis = build_basis(config.length, config.solver.n_modes)
    params = config.params
    lam1 = float(basis.eigenvalues[1])
    amp = math.sqrt(basis.length / 2.0)  # cos(pi x / L) = amp * w_1
    kappa = math.pi / basis.length

    def forcing_third(x, t):
        gain = 6.0 * params.tau + 6.0 * t + lam1 * (3.0 * params.b * t**2 + params.c2 * t**3)
        return gain * np.cos(kappa * np.asarray(x, dtype=float))

    def forcing_second(x, t):
        gain = 6.0 * t + lam1 * (3.0 * params.delta * t**2 + params.c2 * t**3)
        return gain * np.cos(kappa * np.asarray(x, dtype=float))

    field = constant_field(1.0)
    rows: list[MmsRow] = []
    finest: Trajectory | None = None
    for solver_name, solve, forcing in (
        ("smgt", solve_smgt_linear, forcing_third),
        ("westervelt", solve_westervelt_linearized, forcing_second),
    ):
        previous_error = None
        for level in range(config.mms_levels):
            solver_cfg = replace(config.solver, dt=config.solver.dt / 2**level)
            traj = solve(params, basis, field, forcing, None, solver_cfg)
            exact = np.zeros_like(traj.coeff)
            exact[:, 1] = amp * traj.times**3
            error = float(np.sqrt(((traj.coeff - exact) ** 2).sum(axis=1)).max())
            order = None if previous_error is None else math.log2(previous_error / error)
            rows.append(MmsRow(solver=solver_name, dt=solver_cfg.dt, error=error, observed_order=order))
            previous_error = error
            if solver_name == "smgt":
                finest = traj
    return rows, finest


def _picard_report_rows(report: PicardReport) -> list[list]:
    rows: list[list] = [["picard", "iterations", report.iterations]]
    for index, diff in enumerate(report.differences, start=1):
        rows.append(["picard", f"difference_{index:02d}", diff])
    for index, factor in enumerate(report.factors, start=2):
        rows.append(["picard", f"factor_{index:02d}", factor])
    for index, norm in enumerate(report.iterate_norms, start=1):
        rows.append(["picard", f"iterate_norm_{index:02d}", norm])
    rows.append(["picard", "converged", int(report.converged)])
    rows.append(["picard", "degeneracy_margin", report.degeneracy_margin])
    return rows


def _audit_rows(
    config: ExperimentConfig,
    traj: Trajectory,
    lower: EnergyRecord,
    higher: EnergyRecord,
) -> list[list]:
    bundle = data_norms(config.signal, None, traj.params, config.solver, max_order=MAX_DATA_ORDER)
    rows: list[list] = []
    for mode in (AuditMode.TAU_DEPENDENT, AuditMode.TAU_UNIFORM, AuditMode.HIGHER):
        if mode is AuditMode.TAU_DEPENDENT and traj.params.tau <= 0.0:
            continue
        record = higher if mode is AuditMode.HIGHER else lower
        report = audit_estimate(record, bundle, mode)
        rows.append(["audit", f"{mode.value}_ratio", report.ratio])
        if report.log_constant is not None:
            rows.append(["audit", f"{mode.value}_log_constant", report.log_constant])
        for flag in report.flags:
            rows.append(["audit", f"{mode.value}_flag", flag])
    return rows


def _solve_for_subcommand(subcommand: str, config: ExperimentConfig):
    basis = build_basis(config.length, config.solver.n_modes)
    g = config.signal
    if subcommand == "solve-linear":
        traj = solve_smgt_linear(
            config.params, basis, constant_field(1.0), None, g, config.solver, config.bc
        )
        return basis, traj, None
    if subcommand == "solve-jmgt":
        traj, report = solve_jmgt(
            config.params, basis, None, g, config.solver, config.bc, NonlinearVariant.FULL_JMGT
        )
        return basis, traj, report
    if subcommand == "solve-relaxed":
        traj, report = solve_jmgt(
            config.params, basis, None, g, config.solver, config.bc, NonlinearVariant.RELAXED_JMGT
        )
        return basis, traj, report
    if subcommand == "solve-westervelt":
        traj, report = solve_westervelt_nonlinear(
            config.params, basis, None, g, config.solver, config.bc
        )
        return basis, traj, report
    raise AssertionError(subcommand)


def _failure_rows(exc: SolverFailure) -> list[list]:
    rows = [["failure", "type", type(exc).__name__], ["failure", "message", str(exc)]]
    if isinstance(exc, NonDegeneracyViolated):
        rows.append(["failure", "violation_time", exc.time])
        rows.append(["failure", "margin", exc.margin])
        rows.append(["failure", "iteration", exc.iteration])
    return rows


def run(
    subcommand: str,
    config: ExperimentConfig,
    out_dir: str | Path = "out",
    quiet: bool = False,
) -> int:
    """Execute one subcommand, writing CSV artifacts into ``out_dir``.

    Returns the process exit code.  On solver failure the partial trajectory
    and energy outputs are removed and report.csv describes the failure.
    """
    if subcommand not in SUBCOMMANDS:
        raise ValueError(f"unknown subcommand {subcommand!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trajectory_path = out / "trajectory.csv"
    energy_path = out / "energy.csv"
    report_path = out / "report.csv"

    def say(message: str) -> None:
        if not quiet:
            print(message)

    for warning in config.warnings:
        if not quiet:
            print(f"warning: {warning}", file=sys.stderr)

    needs_positive_tau = subcommand in ("solve-linear", "solve-jmgt", "solve-relaxed", "mms") or (
        subcommand == "energy-audit" and config.tau_sweep is None
    )
    if needs_positive_tau and config.params.tau <= 0.0:
        print(f"config error: {subcommand} requires tau > 0", file=sys.stderr)
        return 1
    if subcommand == "limit-study" and config.tau_sweep is None:
        print("config error: limit-study requires tau_sweep in [experiment]", file=sys.stderr)
        return 1

    written: list[Path] = []
    try:
        if subcommand in ("solve-linear", "solve-jmgt", "solve-relaxed", "solve-westervelt"):
            basis, traj, picard = _solve_for_subcommand(subcommand, config)
            lower = energy_lower(traj, basis)
            higher = energy_higher(traj, basis)
            flux = (
                boundary_flux(traj, traj.params, basis)
                if config.bc is BoundaryKind.MIXED
                else None
            )
            _write_trajectory(trajectory_path, traj)
            written.append(trajectory_path)
            _write_energy(energy_path, lower, higher, flux)
            written.append(energy_path)
            rows: list[list] = []
            if picard is not None:
                rows += _picard_report_rows(picard)
            rows += _audit_rows(config, traj, lower, higher)
            _write_csv(report_path, ["section", "key", "value"], rows)
            say(f"{subcommand}: {traj.n_steps} steps, artifacts in {out}")
            return 0

        if subcommand == "limit-study":
            result, reference = limit_study(config)
            basis = build_basis(config.length, config.solver.n_modes)
            _write_trajectory(trajectory_path, reference)
            written.append(trajectory_path)
            _write_energy(
                energy_path, energy_lower(reference, basis), energy_higher(reference, basis)
            )
            written.append(energy_path)
            header = [
                "tau",
                "velocity_error",
                "energy_error",
                "picard_iterations",
                "degeneracy_margin",
                "reference_iterations",
                "reference_margin",
            ]
            table = [
                [
                    row.tau,
                    row.velocity_error,
                    row.energy_error,
                    row.picard_iterations,
                    row.degeneracy_margin,
                    result.reference_iterations,
                    result.reference_margin,
                ]
                for row in result.rows
            ]
            _write_csv(report_path, header, table)
            say(f"limit-study: {len(result.rows)} sweep members, artifacts in {out}")
            return 0

        if subcommand == "energy-audit":
            basis = build_basis(config.length, config.solver.n_modes)
            taus = (config.params.tau,) if config.tau_sweep is None else config.tau_sweep
            table = []
            base_written = False
            for tau in taus:
                params_tau = replace(config.params, tau=tau)
                traj = solve_smgt_linear(
                    params_tau, basis, constant_field(1.0), None, config.signal,
                    config.solver, config.bc,
                )
                lower = energy_lower(traj, basis)
                higher = energy_higher(traj, basis)
                if not base_written:
                    _write_trajectory(trajectory_path, traj)
                    written.append(trajectory_path)
                    flux = (
                        boundary_flux(traj, traj.params, basis)
                        if config.bc is BoundaryKind.MIXED
                        else None
                    )
                    _write_energy(energy_path, lower, higher, flux)
                    written.append(energy_path)
                    base_written = True
                bundle = data_norms(
                    config.signal, None, params_tau, config.solver, max_order=MAX_DATA_ORDER
                )
                for mode in (AuditMode.TAU_DEPENDENT, AuditMode.TAU_UNIFORM, AuditMode.HIGHER):
                    record = higher if mode is AuditMode.HIGHER else lower
                    report = audit_estimate(record, bundle, mode)
                    table.append(
                        [
                            tau,
                            mode.value,
                            report.lhs_total,
                            report.rhs_total,
                            report.ratio,
                            report.log_constant,
                            ";".join(report.flags),
                        ]
                    )
            _write_csv(
                report_path,
                ["tau", "mode", "lhs", "rhs", "ratio", "log_constant", "flags"],
                table,
            )
            say(f"energy-audit: {len(taus)} run(s), artifacts in {out}")
            return 0

        if subcommand == "mms":
            rows, finest = mms_study(config)
            basis = build_basis(config.length, config.solver.n_modes)
            _write_trajectory(trajectory_path, finest)
            written.append(trajectory_path)
            _write_energy(energy_path, energy_lower(finest, basis), energy_higher(finest, basis))
            written.append(energy_path)
            table = [[row.solver, row.dt, row.error, row.observed_order] for row in rows]
            _write_csv(report_path, ["solver", "dt", "error", "observed_order"], table)
            say(f"mms: {len(rows)} rows, artifacts in {out}")
            return 0

    except SolverFailure as exc:
        for path in written:
            path.unlink(missing_ok=True)
        _write_csv(report_path, ["section", "key", "value"], _failure_rows(exc))
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2
    except ConfigFileError as exc:
        for error in exc.errors:
            print(f"config error: {error}", file=sys.stderr)
        return 1

    raise AssertionError(f"unhandled subcommand {subcommand!r}")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="jmgt-lab",
        description="Spectral-Galerkin experiments for third-order nonlinear acoustics",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="path to the experiment config file")
    parser.add_argument("--out", default="./out", help="output directory (default ./out)")
    parser.add_argument("--quiet", action="store_true", help="suppress progress messages")
    args = parser.parse_args(argv)
    try:
        config = parse_config(args.config)
    except ConfigFileError as exc:
        for error in exc.errors:
            print(f"config error: {error}", file=sys.stderr)
        return 1
    return run(args.subcommand, config, out_dir=args.out, quiet=args.quiet)


if __name__ == "__main__":
    sys.exit(main())

"""Acceptance suite: one test per exit criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines; every tolerance is pinned here, nothing is deferred to calibration.
"""

import math
import time

import numpy as np

from jmgt_lab import (
    BoundaryKind,
    ModelParams,
    NonlinearVariant,
    SolverConfig,
    WindowedSignal,
    assemble_mass,
    assemble_stiffness,
    boundary_flux,
    build_basis,
    build_quadrature,
    constant_field,
    energy_lower,
    field_from_trajectory,
    harmonic_extension,
    lift_forcing,
    ode_residual_z,
    signal_eval,
    solve_jmgt,
    solve_smgt_linear,
    solve_westervelt_linearized,
    solve_westervelt_nonlinear,
    trajectory_distance,
)
from jmgt_lab.assembly import CoefficientField

from helpers import fd_weights

L = math.pi


def report(number, name, ok, detail, elapsed=None, budget=None):
    status = "PASS" if ok else "FAIL"
    timing = ""
    if elapsed is not None:
        timing = f" [{elapsed:.2f} s" + (f" < {budget:.0f} s]" if budget else "]")
    print(f"criterion {number:02d} ({name}): {status} {detail}{timing}")
    assert ok, f"criterion {number} ({name}) failed: {detail}"
    if budget is not None:
        assert elapsed < budget, f"criterion {number} exceeded its {budget} s budget"


def test_criterion_01_zero_data_uniqueness():
    start = time.perf_counter()
    basis = build_basis(L, 6)
    config = SolverConfig(dt=0.02, t_final=0.4, n_modes=6)
    params = ModelParams(c2=1.0, delta=1.0, tau=0.1, k=0.4, beta=0.5)
    worst = 0.0
    for bc in (BoundaryKind.PURE_NEUMANN, BoundaryKind.MIXED):
        runs = [
            solve_smgt_linear(params, basis, constant_field(1.0), None, None, config, bc),
            solve_westervelt_linearized(
                params, basis, constant_field(1.0), None, None, config, bc
            ),
            solve_jmgt(params, basis, None, None, config, bc, NonlinearVariant.FULL_JMGT)[0],
            solve_jmgt(params, basis, None, None, config, bc, NonlinearVariant.RELAXED_JMGT)[0],
            solve_westervelt_nonlinear(params, basis, None, None, config, bc)[0],
        ]
        for traj in runs:
            worst = max(worst, float(np.abs(traj.coeff).max()))
    elapsed = time.perf_counter() - start
    report(1, "zero-data uniqueness", worst <= 1e-14, f"max |xi| = {worst:.2e}", elapsed, 1.0)


def test_criterion_02_manufactured_convergence():
    start = time.perf_counter()
    basis = build_basis(L, 8)
    params = ModelParams(c2=1.0, delta=0.05, tau=0.1)
    amp = math.sqrt(math.pi / 2.0)

    def forcing_third(x, t):
        gain = 6.0 * params.tau + 6.0 * t + 3.0 * params.b * t**2 + params.c2 * t**3
        return gain * np.cos(np.asarray(x, dtype=float))

    def forcing_second(x, t):
        gain = 6.0 * t + 3.0 * params.delta * t**2 + params.c2 * t**3
        return gain * np.cos(np.asarray(x, dtype=float))

    orders = []
    for solve, forcing in (
        (solve_smgt_linear, forcing_third),
        (solve_westervelt_linearized, forcing_second),
    ):
        errors = []
        for dt in (1 / 40, 1 / 80, 1 / 160):
            config = SolverConfig(dt=dt, t_final=1.0, n_modes=8)
            traj = solve(params, basis, constant_field(1.0), forcing, None, config)
            errors.append(np.abs(traj.coeff[:, 1] - amp * traj.times**3).max())
        orders += [math.log2(a / b) for a, b in zip(errors, errors[1:])]
    ok = all(1.7 <= order <= 2.3 for order in orders)
    elapsed = time.perf_counter() - start
    report(
        2,
        "manufactured-solution convergence",
        ok,
        "orders " + ", ".join(f"{order:.2f}" for order in orders),
        elapsed,
        10.0,
    )


def test_criterion_03_linearity_and_homogeneity():
    basis = build_basis(L, 6)
    params = ModelParams(c2=1.0, delta=0.5, tau=0.1)
    config = SolverConfig(dt=0.01, t_final=0.6, n_modes=6)
    field = constant_field(1.0)
    f1 = lambda x, t: np.sin(x) * t**2
    f2 = lambda x, t: np.cos(2 * x) * (1.0 - np.exp(-t))
    half = WindowedSignal(0.4, 2.0, 5, 1.0)
    full = WindowedSignal(0.8, 2.0, 5, 1.0)
    sol1 = solve_smgt_linear(params, basis, field, f1, half, config)
    sol2 = solve_smgt_linear(params, basis, field, f2, half, config)
    combined = solve_smgt_linear(
        params, basis, field, lambda x, t: f1(x, t) + f2(x, t), full, config
    )
    superposition_gap = float(np.abs(sol1.coeff + sol2.coeff - combined.coeff).max())

    scale = 3.0
    scaled = solve_smgt_linear(
        params,
        basis,
        field,
        lambda x, t: scale * (f1(x, t) + f2(x, t)),
        WindowedSignal(scale * 0.8, 2.0, 5, 1.0),
        config,
    )
    base_record = energy_lower(combined, basis)
    scaled_record = energy_lower(scaled, basis)
    worst_rel = 0.0
    for name in ("sq_tt_l2", "sq_t_h1", "dual_accum", "tt_accum"):
        a = getattr(base_record, name)
        b = getattr(scaled_record, name)
        mask = a > 1e-18
        worst_rel = max(worst_rel, float(np.abs(b[mask] / a[mask] / scale**2 - 1.0).max()))
    ok = superposition_gap <= 1e-10 and worst_rel <= 1e-8
    report(
        3,
        "linearity and s^2 homogeneity",
        ok,
        f"superposition gap {superposition_gap:.2e}, energy scaling off by {worst_rel:.2e}",
    )


def test_criterion_04_tau_uniform_energy_bound():
    start = time.perf_counter()
    basis = build_basis(L, 8)
    sig = WindowedSignal(0.2, 2.0, 5, 1.0)
    config = SolverConfig(dt=1 / 100, t_final=1.0, n_modes=8)
    totals = []
    for tau in (1e-1, 1e-2, 1e-3, 1e-4):
        params = ModelParams(c2=1.0, delta=1.0, tau=tau)
        traj = solve_smgt_linear(params, basis, constant_field(1.0), None, sig, config)
        record = energy_lower(traj, basis)
        totals.append(
            float(
                record.tt_accum[-1]
                + record.sq_t_h1.max()
                + record.dual_accum[-1]
                + tau * record.sq_tt_l2.max()
            )
        )
    spread = max(totals) / min(totals)
    elapsed = time.perf_counter() - start
    report(
        4,
        "tau-uniform energy bound",
        spread <= 2.0,
        f"energy total spread {spread:.3f}x over tau in 1e-1..1e-4",
        elapsed,
        30.0,
    )


def test_criterion_05_singular_limit():
    start = time.perf_counter()
    basis = build_basis(L, 16)
    params = ModelParams(c2=1.0, delta=1.0, tau=0.1, k=0.4)
    sig = WindowedSignal(0.5, 2.0, 5, 2.0)
    config = SolverConfig(dt=1 / 200, t_final=2.0, n_modes=16, picard_tol=1e-10, picard_max=30)
    reference, _ = solve_westervelt_nonlinear(params, basis, None, sig, config)
    taus = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
    errors = []
    margins = []
    for tau in taus:
        from dataclasses import replace

        traj, rep = solve_jmgt(replace(params, tau=tau), basis, None, sig, config)
        errors.append(float(np.sqrt(((traj.coeff_t - reference.coeff_t) ** 2).sum(axis=1)).max()))
        margins.append(rep.degeneracy_margin)
    decreasing = all(b < a for a, b in zip(errors, errors[1:]))
    ok = decreasing and errors[-1] < 0.05 * errors[0] and min(margins) > 0.5
    elapsed = time.perf_counter() - start
    report(
        5,
        "singular limit",
        ok,
        f"e_t {errors[0]:.3e} -> {errors[-1]:.3e} (ratio {errors[-1] / errors[0]:.4f}), "
        f"min margin {min(margins):.2f}",
        elapsed,
        120.0,
    )


def test_criterion_06_contraction():
    maxima = []
    all_below_one = True
    basis = build_basis(L, 8)
    for amplitude in (0.4, 0.2, 0.1):
        params = ModelParams(c2=1.0, delta=1.0, tau=0.1, k=0.4)
        sig = WindowedSignal(amplitude, 2.0, 5, 1.0)
        config = SolverConfig(dt=1 / 100, t_final=1.0, n_modes=8, picard_tol=1e-8, picard_max=30)
        _, rep = solve_jmgt(params, basis, None, sig, config)
        all_below_one &= all(factor < 1.0 for factor in rep.factors)
        meaningful = [
            factor
            for factor, previous in zip(rep.factors, rep.differences)
            if previous > 100.0 * config.picard_tol
        ]
        maxima.append(max(meaningful))
    monotone = maxima[0] >= maxima[1] >= maxima[2]
    ok = all_below_one and monotone
    report(
        6,
        "fixed-point contraction",
        ok,
        "max factors " + ", ".join(f"{m:.3f}" for m in maxima) + " for A = 0.4, 0.2, 0.1",
    )


def test_criterion_07_relaxed_full_equivalence():
    basis = build_basis(L, 8)
    params = ModelParams(c2=1.0, delta=1.0, tau=0.1, k=0.4)
    sig = WindowedSignal(0.3, 2.0, 5, 1.0)
    config = SolverConfig(dt=1 / 100, t_final=1.0, n_modes=8, picard_tol=1e-9, picard_max=30)
    full, full_rep = solve_jmgt(params, basis, None, sig, config, NonlinearVariant.FULL_JMGT)
    relaxed, _ = solve_jmgt(params, basis, None, sig, config, NonlinearVariant.RELAXED_JMGT)
    distance = trajectory_distance(full, relaxed, basis)
    clamp_inactive = full_rep.degeneracy_margin > 0.0
    ok = clamp_inactive and distance <= 10.0 * config.picard_tol
    report(
        7,
        "relaxed/full equivalence",
        ok,
        f"energy-norm distance {distance:.2e} <= {10 * config.picard_tol:.1e}, "
        f"margin {full_rep.degeneracy_margin:.2f}",
    )


def test_criterion_08_absorbing_dissipation():
    basis = build_basis(L, 8)
    params = ModelParams(c2=1.0, delta=2.0, tau=0.1, beta=0.5)
    sig = WindowedSignal(2.0, 3.0, 5, 5.0)
    config = SolverConfig(dt=1 / 200, t_final=5.5, n_modes=8)
    traj = solve_smgt_linear(
        params, basis, constant_field(1.0), None, sig, config, BoundaryKind.MIXED
    )
    window_end = 4.0
    # the drive has decayed at least three orders below its peak by t0
    peak = np.abs(signal_eval(sig, traj.times, 0)).max()
    assert abs(signal_eval(sig, window_end, 0)) < 1e-3 * peak
    stiff = np.diag(basis.eigenvalues)
    energy = (
        0.5 * params.tau * (traj.coeff_tt**2).sum(axis=1)
        + 0.5 * params.b * np.einsum("mi,ij,mj->m", traj.coeff_t, stiff, traj.coeff_t)
        + (traj.coeff_t**2).sum(axis=1)
    )
    after = energy[traj.times > window_end]
    assert after[0] > 1e-9  # post-window energy is not vacuously zero
    max_increment = float(np.diff(after).max())
    flux = boundary_flux(traj, params, basis)
    flux_ok = (
        np.all(flux.acceleration_flux_accum >= 0.0)
        and np.all(flux.velocity_flux_max >= 0.0)
        and np.all(np.diff(flux.acceleration_flux_accum) >= 0.0)
        and np.all(np.diff(flux.velocity_flux_max) >= 0.0)
    )
    ok = max_increment <= 1e-8 and bool(flux_ok)
    report(
        8,
        "absorbing-boundary dissipation",
        ok,
        f"max energy increment after t0 = {max_increment:.2e}, flux monotone = {bool(flux_ok)}",
    )


def test_criterion_09_variation_of_constants_diagnostic():
    params = ModelParams(c2=1.0, delta=1.0, tau=0.1, k=0.3)
    basis = build_basis(L, 8)
    sig = WindowedSignal(0.3, 2.0, 5, 1.0)
    maxima = []
    for dt in (1 / 100, 1 / 200):
        config = SolverConfig(dt=dt, t_final=1.0, n_modes=8, picard_tol=1e-11, picard_max=30)
        traj, _ = solve_jmgt(params, basis, None, sig, config)
        field = field_from_trajectory(basis, traj, params.k)
        maxima.append(float(ode_residual_z(traj, basis, field, g=sig).max()))
    ratio = maxima[0] / maxima[1]
    ok = 1.6 <= ratio <= 2.4
    report(
        9,
        "z-ODE diagnostic first-order decay",
        ok,
        f"max residual {maxima[0]:.2e} -> {maxima[1]:.2e} (ratio {ratio:.2f})",
    )


def test_criterion_10_assembly_oracles():
    basis = build_basis(L, 8)
    quad = build_quadrature(L, 32)

    stiffness_gap = float(
        np.abs(assemble_stiffness(basis, quad) - np.diag(basis.eigenvalues)).max()
    )

    const_mass_gap = float(
        np.abs(assemble_mass(basis, quad, constant_field(2.5), 0.0) - 2.5 * np.eye(8)).max()
    )

    zero = lambda x, t: np.zeros_like(np.asarray(x, dtype=float))
    linear_field = CoefficientField(
        value=lambda x, t: np.asarray(x, dtype=float), space_derivative=zero, time_derivative=zero
    )
    oracle_quad = build_quadrature(L, 320)
    mass_gap = float(
        np.abs(
            assemble_mass(basis, quad, linear_field, 0.0)
            - assemble_mass(basis, oracle_quad, linear_field, 0.0)
        ).max()
    )

    lift = harmonic_extension(basis, quad, 1.0)
    grid = np.linspace(0.0, L, 1000)
    values = lift.profile(grid)
    h = grid[1] - grid[0]
    stride = 4
    stencil = fd_weights(0.0, (np.arange(7) - 3) * stride * h, 2)
    reach = 3 * stride
    second = np.array(
        [stencil @ values[m - reach : m + reach + 1 : stride] for m in range(reach, 1000 - reach)]
    )
    lift_residual = float(np.abs(-second + values[reach:-reach]).max())

    lifted_gap, solver_tolerance = _lifted_equivalence_gap()

    ok = (
        stiffness_gap < 1e-12
        and const_mass_gap < 1e-12
        and mass_gap < 1e-10
        and lift_residual < 1e-10
        and lifted_gap <= 10.0 * solver_tolerance
    )
    report(
        10,
        "assembly oracles",
        ok,
        f"K gap {stiffness_gap:.1e}, const-M gap {const_mass_gap:.1e}, "
        f"M(x) gap {mass_gap:.1e}, lift residual {lift_residual:.1e}, "
        f"lifted-vs-direct {lifted_gap:.2e} <= 10 x {solver_tolerance:.2e}",
    )


def _lifted_equivalence_gap():
    """Direct inhomogeneous solve vs homogenized solve plus boundary lift.

    The solver tolerance is estimated independently by re-solving the direct
    problem at doubled resolution (Richardson-style error proxy).
    """
    params = ModelParams(c2=1.0, delta=0.5, tau=0.2)
    sig = WindowedSignal(0.3, 2.0, 5, 1.0)

    def alpha(x, t):
        return 1.0 + 0.25 * np.cos(math.pi * np.asarray(x, dtype=float) / L) * (1.0 + 0.5 * t)

    def alpha_dx(x, t):
        return (
            -0.25
            * math.pi
            / L
            * np.sin(math.pi * np.asarray(x, dtype=float) / L)
            * (1.0 + 0.5 * t)
        )

    def alpha_dt(x, t):
        return 0.125 * np.cos(math.pi * np.asarray(x, dtype=float) / L) * np.ones_like(
            np.asarray(x, dtype=float)
        )

    field = CoefficientField(value=alpha, space_derivative=alpha_dx, time_derivative=alpha_dt)

    def solve_pair(n, dt):
        basis = build_basis(L, n)
        config = SolverConfig(dt=dt, t_final=1.0, n_modes=n)
        quad = build_quadrature(L, config.quad_points)
        direct = solve_smgt_linear(params, basis, field, None, sig, config)
        lifted_source = lambda x, t: lift_forcing(basis, sig, field, params, t)(x)
        homogenized = solve_smgt_linear(params, basis, field, lifted_source, None, config)
        unit = harmonic_extension(basis, quad, 1.0)
        reconstructed = homogenized.coeff + np.outer(
            signal_eval(sig, homogenized.times, 0), unit.coeffs
        )
        return direct, reconstructed

    direct, reconstructed = solve_pair(12, 1 / 100)
    gap = float(np.sqrt(((direct.coeff - reconstructed) ** 2).sum(axis=1)).max())
    refined, _ = solve_pair(24, 1 / 200)
    solver_tolerance = float(
        np.sqrt(((direct.coeff - refined.coeff[::2, :12]) ** 2).sum(axis=1)).max()
    )
    return gap, solver_tolerance

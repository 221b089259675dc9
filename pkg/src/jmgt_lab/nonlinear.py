"""Fixed-point solvers for the nonlinear acoustic models.

The nonlinearity is handled by whole-horizon successive substitution: freeze
the coefficient 1 - 2k*psi_t (or its clamped relaxation) at the previous
iterate, re-solve the linear problem on [0, T], and measure the difference in
the energy norm in which the underlying map contracts for small data.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .assembly import SpaceTimeFn, constant_field, field_from_trajectory
from .basis import SpectralBasis, mode_matrix
from .energy import trapezoid_total
from .exceptions import NonDegeneracyViolated, PicardDivergenceError
from .integrate import Trajectory, solve_smgt_linear, solve_westervelt_linearized, zero_trajectory
from .model import BoundaryKind, ModelParams, SolverConfig, WindowedSignal

__all__ = [
    "NonlinearVariant",
    "PicardReport",
    "clamp_h",
    "triple_norm",
    "trajectory_distance",
    "degeneracy_check",
    "solve_jmgt",
    "solve_westervelt_nonlinear",
]


class NonlinearVariant(Enum):
    """Which nonlinear coefficient multiplies the second time derivative.

    FULL_JMGT uses 1 - 2k*psi_t as is and is guarded against degeneracy;
    RELAXED_JMGT clamps the argument so the coefficient stays in [0, 2];
    WESTERVELT is the tau = 0 model with the unclamped coefficient.
    """

    FULL_JMGT = "full"
    RELAXED_JMGT = "relaxed"
    WESTERVELT = "westervelt"


@dataclass
class PicardReport:
    """Convergence log of one fixed-point run.

    ``differences[m]`` is the energy-norm distance between iterates m and
    m+1 (the first entry measures the distance from the zero initial
    iterate); ``factors`` are consecutive ratios of differences.
    """

    iterations: int
    differences: list[float]
    factors: list[float]
    converged: bool
    degeneracy_margin: float
    iterate_norms: list[float]


def clamp_h(s, k: float):
    """Bounded coefficient h(s) = 1 - clamp(2ks, -1, 1), with range [0, 2].

    Coincides with 1 - 2ks whenever |2ks| <= 1, so the relaxation is inactive
    on non-degenerate states.
    """
    return 1.0 - np.clip(2.0 * k * np.asarray(s, dtype=float), -1.0, 1.0)


def triple_norm(
    basis: SpectralBasis,
    times: np.ndarray,
    coeff_t: np.ndarray,
    coeff_tt: np.ndarray,
    coeff_ttt: np.ndarray | None,
    tau: float,
) -> float:
    """Energy norm in which the fixed-point map contracts.

    |||v|||^2 = tau^2 ||v_ttt||^2_{L2 (H1)*} + tau ||v_tt||^2_{Linf L2}
              + ||v_tt||^2_{L2 L2} + ||v_t||^2_{Linf H1},

    evaluated discretely (trapezoid in time, max over stored steps).  For
    tau = 0 the first two terms drop, which is the Westervelt accounting.
    """
    dt = float(times[1] - times[0])
    lam = basis.eigenvalues
    sq_tt = np.sum(coeff_tt**2, axis=1)
    total = trapezoid_total(sq_tt, dt) + float(np.sum((1.0 + lam) * coeff_t**2, axis=1).max())
    if tau > 0.0:
        if coeff_ttt is None:
            raise ValueError("tau > 0 norm requires third-derivative coefficients")
        sq_dual = np.sum(coeff_ttt**2 / (1.0 + lam), axis=1)
        total += tau**2 * trapezoid_total(sq_dual, dt) + tau * float(sq_tt.max())
    return float(np.sqrt(total))


def trajectory_distance(a: Trajectory, b: Trajectory, basis: SpectralBasis) -> float:
    """|||a - b||| on a shared time grid."""
    if a.times.shape != b.times.shape or not np.allclose(a.times, b.times):
        raise ValueError("trajectories live on different time grids")
    tau = a.params.tau
    third = None
    if tau > 0.0:
        third = a.coeff_ttt - b.coeff_ttt
    return triple_norm(basis, a.times, a.coeff_t - b.coeff_t, a.coeff_tt - b.coeff_tt, third, tau)


def _margin_series(
    traj: Trajectory, basis: SpectralBasis, k: float, eval_grid: int
) -> np.ndarray:
    """Per-step minimum over the spatial grid of 1 - 2k*psi_t."""
    points = np.linspace(0.0, basis.length, max(int(eval_grid), 2))
    velocity = traj.coeff_t @ mode_matrix(basis, points)
    return (1.0 - 2.0 * k * velocity).min(axis=1)


def degeneracy_check(
    traj: Trajectory,
    basis: SpectralBasis,
    k: float,
    eval_grid: int | None = None,
) -> float:
    """Minimum of the coefficient 1 - 2k*psi_t over the space-time grid.

    Pure measurement; the abort policy for unclamped variants lives in the
    fixed-point drivers.  The default spatial resolution of 8 points per mode
    bounds the extremum of a band-limited cosine sum to well under 1%.
    """
    grid = eval_grid if eval_grid is not None else 8 * basis.n
    return float(_margin_series(traj, basis, k, grid).min())


def _guard_degeneracy(
    traj: Trajectory,
    basis: SpectralBasis,
    k: float,
    eval_grid: int,
    iteration: int,
) -> float:
    margins = _margin_series(traj, basis, k, eval_grid)
    margin = float(margins.min())
    if margin <= 0.0:
        first_bad = int(np.argmax(margins <= 0.0))
        raise NonDegeneracyViolated(margin, float(traj.times[first_bad]), iteration)
    if margin < 0.1:
        warnings.warn(
            f"degeneracy margin {margin:.3g} < 0.1; the model is close to degenerate",
            RuntimeWarning,
            stacklevel=3,
        )
    return margin


def _picard_loop(
    solve_once,
    params: ModelParams,
    basis: SpectralBasis,
    config: SolverConfig,
    bc: BoundaryKind,
    clamped: bool,
    guarded: bool,
    with_third: bool,
) -> tuple[Trajectory, PicardReport]:
    previous = zero_trajectory(params, basis, config, bc, with_third=with_third)
    field = constant_field(1.0)
    differences: list[float] = []
    iterate_norms: list[float] = []
    current = previous
    converged = False
    iterations = 0
    for iteration in range(1, config.picard_max + 1):
        iterations = iteration
        current = solve_once(field)
        if guarded:
            _guard_degeneracy(current, basis, params.k, config.eval_grid, iteration)
        diff = trajectory_distance(current, previous, basis)
        differences.append(diff)
        iterate_norms.append(
            triple_norm(
                basis,
                current.times,
                current.coeff_t,
                current.coeff_tt,
                current.coeff_ttt,
                current.params.tau,
            )
        )
        if diff < config.picard_tol:
            converged = True
            break
        field = field_from_trajectory(basis, current, params.k, clamped=clamped)
        previous = current
    if not converged:
        raise PicardDivergenceError(differences, config.picard_max)
    factors = [
        differences[i] / differences[i - 1] if differences[i - 1] > 0.0 else 0.0
        for i in range(1, len(differences))
    ]
    report = PicardReport(
        iterations=iterations,
        differences=differences,
        factors=factors,
        converged=True,
        degeneracy_margin=degeneracy_check(current, basis, params.k, config.eval_grid),
        iterate_norms=iterate_norms,
    )
    return current, report


def solve_jmgt(
    params: ModelParams,
    basis: SpectralBasis,
    f: SpaceTimeFn | None,
    g: WindowedSignal | None,
    config: SolverConfig,
    bc: BoundaryKind = BoundaryKind.PURE_NEUMANN,
    variant: NonlinearVariant = NonlinearVariant.FULL_JMGT,
) -> tuple[Trajectory, PicardReport]:
    """Solve the third-order nonlinear model by successive substitution.

    The first iterate freezes alpha = 1 (the zero initial iterate); each
    following iterate rebuilds alpha from the previous trajectory.  The loop
    stops when the energy-norm difference falls below ``picard_tol`` and
    raises PicardDivergenceError at the iteration cap.  FULL_JMGT runs abort
    with NonDegeneracyViolated as soon as an iterate loses positivity of
    1 - 2k*psi_t; the relaxed variant never aborts, that being the point of
    the relaxation.
    """
    if variant is NonlinearVariant.WESTERVELT:
        return solve_westervelt_nonlinear(params, basis, f, g, config, bc)
    if params.tau <= 0.0:
        raise ValueError(f"the third-order variants require tau > 0, got {params.tau}")

    def solve_once(field):
        return solve_smgt_linear(params, basis, field, f, g, config, bc)

    return _picard_loop(
        solve_once,
        params,
        basis,
        config,
        bc,
        clamped=(variant is NonlinearVariant.RELAXED_JMGT),
        guarded=(variant is NonlinearVariant.FULL_JMGT),
        with_third=True,
    )


def solve_westervelt_nonlinear(
    params: ModelParams,
    basis: SpectralBasis,
    f: SpaceTimeFn | None,
    g: WindowedSignal | None,
    config: SolverConfig,
    bc: BoundaryKind = BoundaryKind.PURE_NEUMANN,
) -> tuple[Trajectory, PicardReport]:
    """Same fixed-point loop over the second-order (tau = 0) solver.

    Convergence is measured in the tau = 0 part of the energy norm.  The
    coefficient is the unclamped 1 - 2k*psi_t, so the degeneracy guard
    applies exactly as in the full third-order model.
    """
    from dataclasses import replace

    params_zero = replace(params, tau=0.0)

    def solve_once(field):
        return solve_westervelt_linearized(params_zero, basis, field, f, g, config, bc)

    return _picard_loop(
        solve_once,
        params_zero,
        basis,
        config,
        bc,
        clamped=False,
        guarded=True,
        with_third=False,
    )

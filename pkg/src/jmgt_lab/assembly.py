"""Assembly of the Galerkin ODE system: stiffness, time-varying mass,
rank-one boundary matrices, load vectors, and the boundary-data lift.

The coefficient field alpha(x, t) enters only through the mass matrix
M(t)_ij = (alpha w_i, w_j); everything else is time-independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field
from typing import TYPE_CHECKING, Callable

import numpy as np

from .basis import End, QuadratureRule, SpectralBasis, mode_matrix, project, trace_vector
from .exceptions import CompatibilityError
from .model import BoundaryKind, ModelParams, WindowedSignal, signal_eval, validate_compatibility

if TYPE_CHECKING:
    from .integrate import Trajectory

__all__ = [
    "CoefficientField",
    "TimeVaryingMass",
    "SystemMatrices",
    "HarmonicLift",
    "assemble_stiffness",
    "assemble_mass",
    "assemble_boundary",
    "assemble_load",
    "assemble_system",
    "harmonic_extension",
    "lift_forcing",
    "constant_field",
    "field_from_trajectory",
]

SpatialFn = Callable[[np.ndarray], np.ndarray]
SpaceTimeFn = Callable[[np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class CoefficientField:
    """Coefficient alpha(x, t) with its spatial and temporal derivatives.

    Evaluators take an ndarray of positions and a scalar time and return an
    array of the same shape.  ``provenance`` records whether the field is a
    closed-form expression or was reconstructed from a stored trajectory.
    """

    value: SpaceTimeFn
    space_derivative: SpaceTimeFn
    time_derivative: SpaceTimeFn
    provenance: str = "analytic"


def constant_field(value: float = 1.0) -> CoefficientField:
    """Spatially and temporally constant coefficient field."""

    def _value(x, t):
        return np.full_like(np.asarray(x, dtype=float), value)

    def _zero(x, t):
        return np.zeros_like(np.asarray(x, dtype=float))

    return CoefficientField(value=_value, space_derivative=_zero, time_derivative=_zero)


def _interp_rows(times: np.ndarray, rows: np.ndarray, t: float) -> np.ndarray:
    """Linear-in-time interpolation of a (steps, n) coefficient history."""
    t = min(max(float(t), times[0]), times[-1])
    j = int(np.searchsorted(times, t, side="right")) - 1
    j = min(max(j, 0), len(times) - 2)
    span = times[j + 1] - times[j]
    theta = 0.0 if span == 0.0 else (t - times[j]) / span
    return (1.0 - theta) * rows[j] + theta * rows[j + 1]


def field_from_trajectory(
    basis: SpectralBasis,
    traj: "Trajectory",
    k: float,
    clamped: bool = False,
) -> CoefficientField:
    """Coefficient field alpha = 1 - 2k*psi_t (optionally clamped) of a stored run.

    psi_t is reconstructed from the stored first-derivative coefficients with
    linear interpolation between time steps (first order in dt).  With
    ``clamped`` the argument 2k*psi_t is clipped to [-1, 1] before being
    subtracted, which keeps alpha in [0, 2] regardless of the data.
    """
    times = traj.times
    coeff_t = traj.coeff_t
    coeff_tt = traj.coeff_tt

    def _velocity(x, t, rows):
        modes = mode_matrix(basis, np.atleast_1d(np.asarray(x, dtype=float)))
        return _interp_rows(times, rows, t) @ modes

    def _value(x, t):
        s = 2.0 * k * _velocity(x, t, coeff_t)
        if clamped:
            s = np.clip(s, -1.0, 1.0)
        return 1.0 - s

    def _saturation_mask(x, t):
        s = 2.0 * k * _velocity(x, t, coeff_t)
        return np.abs(s) >= 1.0 if clamped else np.zeros(s.shape, dtype=bool)

    def _space_derivative(x, t):
        modes = mode_matrix(basis, np.atleast_1d(np.asarray(x, dtype=float)), deriv=1)
        grad = -2.0 * k * (_interp_rows(times, coeff_t, t) @ modes)
        return np.where(_saturation_mask(x, t), 0.0, grad)

    def _time_derivative(x, t):
        rate = -2.0 * k * _velocity(x, t, coeff_tt)
        return np.where(_saturation_mask(x, t), 0.0, rate)

    return CoefficientField(
        value=_value,
        space_derivative=_space_derivative,
        time_derivative=_time_derivative,
        provenance="trajectory",
    )


def assemble_stiffness(basis: SpectralBasis, quad: QuadratureRule) -> np.ndarray:
    """Stiffness K_ij = integral of w_i' w_j' (diag of eigenvalues to roundoff)."""
    grads = mode_matrix(basis, quad.nodes, deriv=1)
    matrix = np.einsum("iq,q,jq->ij", grads, quad.weights, grads)
    return 0.5 * (matrix + matrix.T)


def assemble_mass(
    basis: SpectralBasis,
    quad: QuadratureRule,
    field: CoefficientField,
    t: float,
) -> np.ndarray:
    """Mass matrix M(t)_ij = integral of alpha(x, t) w_i w_j."""
    modes = mode_matrix(basis, quad.nodes)
    alpha = np.asarray(field.value(quad.nodes, t), dtype=float)
    alpha = np.broadcast_to(alpha, quad.nodes.shape)
    matrix = np.einsum("iq,q,jq->ij", modes, quad.weights * alpha, modes)
    return 0.5 * (matrix + matrix.T)


def assemble_boundary(basis: SpectralBasis, end: End) -> np.ndarray:
    """Rank-one trace matrix B_ij = w_i(a) w_j(a) at one end.

    The caller scales by c2*beta (velocity term) and b*beta (acceleration
    term) when inserting it into the mixed-boundary system.
    """
    traces = trace_vector(basis, end)
    return np.outer(traces, traces)


class TimeVaryingMass:
    """Mass-matrix sampler with per-time caching of the coefficient values.

    Caches alpha evaluated at the quadrature nodes keyed by the query time,
    so re-sampling the same grid times (stepping plus third-derivative
    recovery) evaluates the field once per step.  A cache instance belongs to
    one run; the underlying basis and quadrature may be shared read-only.
    """

    def __init__(self, basis: SpectralBasis, quad: QuadratureRule, field: CoefficientField):
        self.basis = basis
        self.quad = quad
        self.field = field
        self._modes = mode_matrix(basis, quad.nodes)
        self._alpha_cache: dict[float, np.ndarray] = {}

    def alpha_values(self, t: float) -> np.ndarray:
        key = float(t)
        cached = self._alpha_cache.get(key)
        if cached is None:
            values = np.asarray(self.field.value(self.quad.nodes, key), dtype=float)
            cached = np.broadcast_to(values, self.quad.nodes.shape).copy()
            self._alpha_cache[key] = cached
        return cached

    def matrix(self, t: float) -> np.ndarray:
        alpha = self.alpha_values(t)
        matrix = np.einsum("iq,q,jq->ij", self._modes, self.quad.weights * alpha, self._modes)
        return 0.5 * (matrix + matrix.T)


def assemble_load(
    basis: SpectralBasis,
    quad: QuadratureRule,
    f: SpaceTimeFn | None,
    g: WindowedSignal | None,
    params: ModelParams,
    t: float,
    bc: BoundaryKind = BoundaryKind.PURE_NEUMANN,
) -> np.ndarray:
    """Load vector F_i(t) = (f(., t), w_i) + (c2*g(t) + b*g_t(t)) * w_i(0).

    The signal always drives the left end; in MIXED mode the right end is
    handled by the boundary matrices, so the load is identical.
    """
    load = np.zeros(basis.n)
    if f is not None:
        load += project(basis, quad, lambda x: f(x, t))
    if g is not None:
        g0 = signal_eval(g, t, 0)
        g1 = signal_eval(g, t, 1)
        load += (params.c2 * g0 + params.b * g1) * trace_vector(basis, End.LEFT)
    return load


@dataclass(frozen=True)
class SystemMatrices:
    """Time-independent operators of one run plus its load assembler."""

    stiffness: np.ndarray
    boundary_left: np.ndarray
    boundary_right: np.ndarray
    load: Callable[[float], np.ndarray] = dataclass_field(repr=False)


def assemble_system(
    basis: SpectralBasis,
    quad: QuadratureRule,
    f: SpaceTimeFn | None,
    g: WindowedSignal | None,
    params: ModelParams,
    bc: BoundaryKind = BoundaryKind.PURE_NEUMANN,
) -> SystemMatrices:
    """Bundle stiffness, both boundary matrices, and the load closure."""

    def load(t: float) -> np.ndarray:
        return assemble_load(basis, quad, f, g, params, t, bc)

    return SystemMatrices(
        stiffness=assemble_stiffness(basis, quad),
        boundary_left=assemble_boundary(basis, End.LEFT),
        boundary_right=assemble_boundary(basis, End.RIGHT),
        load=load,
    )


@dataclass(frozen=True)
class HarmonicLift:
    """Closed-form solution of -v'' + v = 0, -v'(0) = h, v'(L) = 0.

    ``coeffs`` holds the L2 projection of the profile onto the basis span.
    """

    boundary_value: float
    length: float
    coeffs: np.ndarray

    def profile(self, x) -> np.ndarray:
        """Evaluate v(x) = h * cosh(L - x) / sinh(L) (overflow-safe form)."""
        pts = np.asarray(x, dtype=float)
        L = self.length
        num = np.exp(-pts) + np.exp(pts - 2.0 * L)
        return self.boundary_value * num / (1.0 - math.exp(-2.0 * L))


def harmonic_extension(basis: SpectralBasis, quad: QuadratureRule, h: float) -> HarmonicLift:
    """Extend Neumann data h at the left end into the interior.

    The extension is the unique solution of -v'' + v = 0 with inward flux h
    at x = 0 and zero flux at x = L; it is returned in closed form together
    with its projection coefficients.
    """
    if not math.isfinite(h):
        raise ValueError(f"boundary value must be finite, got {h}")
    lift = HarmonicLift(boundary_value=float(h), length=basis.length, coeffs=np.zeros(basis.n))
    coeffs = project(basis, quad, lift.profile)
    return HarmonicLift(boundary_value=float(h), length=basis.length, coeffs=coeffs)


def lift_forcing(
    basis: SpectralBasis,
    g: WindowedSignal,
    field: CoefficientField,
    params: ModelParams,
    t: float,
    f: SpaceTimeFn | None = None,
) -> SpatialFn:
    """Forcing of the homogenized problem at time t.

    Shifting the unknown by the lifted boundary data N g turns the
    inhomogeneous-Neumann problem into a homogeneous one whose source is

        f - tau*N g_ttt - alpha*N g_tt + c2*N g + b*N g_t,

    where the identity -N g + Delta(N g) = 0 replaced Delta(N g) by N g.
    Returns a spatial function of x for the given time.
    """
    violations = validate_compatibility(g, 3)
    if violations:
        raise CompatibilityError(violations, 3)
    unit = HarmonicLift(boundary_value=1.0, length=basis.length, coeffs=np.zeros(basis.n))
    g0 = signal_eval(g, t, 0)
    g1 = signal_eval(g, t, 1)
    g2 = signal_eval(g, t, 2)
    g3 = signal_eval(g, t, 3)
    static_gain = params.c2 * g0 + params.b * g1 - params.tau * g3

    def source(x: np.ndarray) -> np.ndarray:
        pts = np.asarray(x, dtype=float)
        profile = unit.profile(pts)
        total = (static_gain - np.asarray(field.value(pts, t), dtype=float) * g2) * profile
        if f is not None:
            total = total + f(pts, t)
        return total

    return source

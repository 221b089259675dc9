"""Physical parameters, boundary-signal family, and solver configuration.

All types here are immutable and safe to share across concurrent runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import UnsupportedOrderError

__all__ = [
    "BoundaryKind",
    "ModelParams",
    "WindowedSignal",
    "SolverConfig",
    "derived_b",
    "signal_eval",
    "validate_compatibility",
    "MAX_SIGNAL_ORDER",
]

#: Highest time-derivative order of the boundary signal used anywhere in the
#: energy audits (the mixed-boundary bundle needs the fourth derivative).
MAX_SIGNAL_ORDER = 4


class BoundaryKind(Enum):
    """Boundary regime of a run.

    PURE_NEUMANN drives the left end with the signal and leaves the right end
    with a homogeneous Neumann condition.  MIXED keeps the signal on the left
    and places an absorbing condition (normal derivative = -beta * velocity)
    on the right end.
    """

    PURE_NEUMANN = "neumann"
    MIXED = "mixed"


@dataclass(frozen=True)
class ModelParams:
    """Coefficients of the acoustic model.

    ``b`` is always derived from the stored fields, so it cannot drift out of
    sync: b = delta + tau * c2.
    """

    c2: float
    delta: float
    tau: float
    k: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if not self.c2 > 0.0:
            raise ValueError(f"c2 must be positive, got {self.c2}")
        if not self.delta > 0.0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.tau < 0.0:
            raise ValueError(f"tau must be nonnegative, got {self.tau}")
        if self.beta < 0.0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")

    @property
    def b(self) -> float:
        """Damping coefficient combining diffusivity and relaxation."""
        return self.delta + self.tau * self.c2


def derived_b(params: ModelParams) -> float:
    """Return the derived damping coefficient b = delta + tau * c2."""
    return params.delta + params.tau * params.c2


@dataclass(frozen=True)
class WindowedSignal:
    """Boundary drive g(t) = A * t^p * exp(-sigma*t) * sin(omega*t), t >= 0.

    An onset power ``p >= 5`` makes g and its first four time derivatives
    vanish at t = 0, which is what the zero-initial-data runs require.  Lower
    powers are representable so that compatibility violations can be detected
    rather than silently excluded.
    """

    amplitude: float
    frequency: float
    onset_power: int = 5
    decay_rate: float = 0.0

    def __post_init__(self):
        if int(self.onset_power) != self.onset_power or self.onset_power < 0:
            raise ValueError(f"onset_power must be a nonnegative integer, got {self.onset_power}")
        if self.decay_rate < 0.0:
            raise ValueError(f"decay_rate must be nonnegative, got {self.decay_rate}")


def signal_eval(sig: WindowedSignal, t, order: int = 0):
    """Evaluate the signal or one of its exact time derivatives.

    The m-th derivative of t^p * exp(z*t) with z = -sigma + i*omega is the
    finite Leibniz sum over derivatives of the two factors; taking the
    imaginary part afterwards recovers the sine factor.  No finite
    differencing is involved.

    Parameters
    ----------
    sig : WindowedSignal
    t : float or array, must be >= 0
    order : derivative order in 0..4

    Returns
    -------
    float or ndarray matching the shape of ``t``.
    """
    if not 0 <= order <= MAX_SIGNAL_ORDER:
        raise UnsupportedOrderError(
            f"derivative order {order} unsupported (must be in 0..{MAX_SIGNAL_ORDER})"
        )
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0.0):
        raise ValueError("signal is defined for t >= 0 only")
    p = int(sig.onset_power)
    z = complex(-sig.decay_rate, sig.frequency)
    acc = np.zeros(arr.shape, dtype=complex)
    for j in range(min(order, p) + 1):
        coeff = math.comb(order, j) * math.perm(p, j)
        acc += coeff * arr ** (p - j) * z ** (order - j)
    values = sig.amplitude * np.imag(acc * np.exp(z * arr))
    if np.isscalar(t) or arr.ndim == 0:
        return float(values)
    return values


def validate_compatibility(sig: WindowedSignal, required_order: int) -> list[int]:
    """Check that g and its derivatives up to ``required_order - 1`` vanish at t = 0.

    Returns the (possibly empty) list of violated derivative orders; an empty
    list means the signal is compatible with zero initial data up to the
    requested order.  Never raises for a well-formed signal.
    """
    if required_order not in (2, 3, 4):
        raise ValueError(f"required_order must be in {{2, 3, 4}}, got {required_order}")
    return [m for m in range(required_order) if signal_eval(sig, 0.0, m) != 0.0]


@dataclass(frozen=True)
class SolverConfig:
    """Discretization and fixed-point settings shared by all solvers.

    ``quad_points`` and ``eval_grid`` may be omitted; they then default to
    4 * n_modes quadrature nodes and 8 * n_modes spatial sample points, the
    smallest counts that resolve every mode product and mode extremum used
    in the checks.
    """

    dt: float
    t_final: float
    n_modes: int
    quad_points: int | None = None
    picard_tol: float = 1e-8
    picard_max: int = 25
    eval_grid: int | None = None

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_final > 0.0:
            raise ValueError(f"t_final must be positive, got {self.t_final}")
        if not self.dt < self.t_final:
            raise ValueError(f"dt = {self.dt} must be smaller than t_final = {self.t_final}")
        if self.n_modes < 1:
            raise ValueError(f"n_modes must be at least 1, got {self.n_modes}")
        if self.quad_points is None:
            object.__setattr__(self, "quad_points", 4 * self.n_modes)
        elif self.quad_points < 4 * self.n_modes:
            raise ValueError(
                f"quad_points = {self.quad_points} must be >= 4 * n_modes = {4 * self.n_modes}"
            )
        if not self.picard_tol > 0.0:
            raise ValueError(f"picard_tol must be positive, got {self.picard_tol}")
        if self.picard_max < 1:
            raise ValueError(f"picard_max must be at least 1, got {self.picard_max}")
        if self.eval_grid is None:
            object.__setattr__(self, "eval_grid", 8 * self.n_modes)
        elif self.eval_grid < 1:
            raise ValueError(f"eval_grid must be positive, got {self.eval_grid}")

    @property
    def n_steps(self) -> int:
        """Number of uniform steps covering [0, t_final]."""
        ratio = self.t_final / self.dt
        steps = int(round(ratio))
        if steps < 1 or abs(steps - ratio) > 1e-9 * max(1.0, ratio):
            steps = int(math.ceil(ratio - 1e-12))
        return steps

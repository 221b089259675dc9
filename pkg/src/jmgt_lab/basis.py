"""Neumann-Laplacian cosine eigenbasis on an interval, with quadrature and norms.

On [0, L] the eigenpairs of the Neumann Laplacian are lambda_i = (i*pi/L)^2
with eigenfunctions w_0 = 1/sqrt(L) and w_i = sqrt(2/L) * cos(i*pi*x/L).
They are orthonormal in L2(0, L), and every Sobolev-scale norm used by the
energy audits is diagonal in this basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

__all__ = [
    "End",
    "Space",
    "QuadratureRule",
    "SpectralBasis",
    "build_quadrature",
    "build_basis",
    "eval_mode",
    "mode_matrix",
    "trace",
    "trace_vector",
    "project",
    "norms",
]

#: Nodes per Gauss-Legendre panel.  With panels chosen so that the worst mode
#: product oscillates at most ~16*pi radians per panel, the Gram identity
#: holds to machine precision for any mode count.
_PANEL_POINTS = 32


class End(Enum):
    LEFT = "left"
    RIGHT = "right"


class Space(Enum):
    """Sobolev-scale norms that are diagonal in the cosine basis."""

    L2 = "L2"
    H1 = "H1"
    H1_DUAL = "H1dual"
    LAPLACIAN_L2 = "LaplacianL2"


@dataclass(frozen=True)
class QuadratureRule:
    """Composite Gauss-Legendre rule on [0, L].

    ``degree`` is the polynomial degree integrated exactly (per panel, hence
    globally for polynomials).
    """

    nodes: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def count(self) -> int:
        return self.nodes.size


@dataclass(frozen=True)
class SpectralBasis:
    """Eigenpairs of the Neumann Laplacian on [0, length]."""

    length: float
    n: int
    eigenvalues: np.ndarray

    @property
    def wavenumbers(self) -> np.ndarray:
        return np.sqrt(self.eigenvalues)

    @property
    def normalizations(self) -> np.ndarray:
        norm = np.full(self.n, math.sqrt(2.0 / self.length))
        norm[0] = 1.0 / math.sqrt(self.length)
        return norm


def build_quadrature(length: float, min_points: int) -> QuadratureRule:
    """Composite Gauss-Legendre rule with at least ``min_points`` nodes.

    Nodes are grouped into panels of at most 32 points; the panel width keeps
    the worst oscillation of a product of two basis modes small enough that
    the rule is exact to roundoff for the assembly integrals.
    """
    if not length > 0.0:
        raise ValueError(f"interval length must be positive, got {length}")
    points = max(int(min_points), _PANEL_POINTS)
    panels = math.ceil(points / _PANEL_POINTS)
    per_panel = math.ceil(points / panels)
    ref_nodes, ref_weights = np.polynomial.legendre.leggauss(per_panel)
    edges = np.linspace(0.0, length, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (half[:, None] * ref_nodes[None, :] + mid[:, None]).ravel()
    weights = (half[:, None] * ref_weights[None, :]).ravel()
    return QuadratureRule(nodes=nodes, weights=weights, degree=2 * per_panel - 1)


def build_basis(length: float, n: int) -> SpectralBasis:
    """First ``n`` Neumann-Laplacian eigenpairs on [0, length]."""
    if not length > 0.0:
        raise ValueError(f"interval length must be positive, got {length}")
    if n < 1:
        raise ValueError(f"mode count must be at least 1, got {n}")
    indices = np.arange(n, dtype=float)
    eigenvalues = (indices * math.pi / length) ** 2
    return SpectralBasis(length=float(length), n=int(n), eigenvalues=eigenvalues)


def mode_matrix(basis: SpectralBasis, x: np.ndarray, deriv: int = 0) -> np.ndarray:
    """Values of all modes (or a derivative) at the points ``x``.

    Returns an (n, len(x)) array; row i holds w_i, w_i' or w_i'' at the
    points.  The second derivative uses the eigenrelation w'' = -lambda * w.
    """
    pts = np.atleast_1d(np.asarray(x, dtype=float))
    kappa = basis.wavenumbers
    phase = kappa[:, None] * pts[None, :]
    norm = basis.normalizations[:, None]
    if deriv == 0:
        return norm * np.cos(phase)
    if deriv == 1:
        return -norm * kappa[:, None] * np.sin(phase)
    if deriv == 2:
        return -basis.eigenvalues[:, None] * norm * np.cos(phase)
    raise ValueError(f"deriv must be 0, 1 or 2, got {deriv}")


def eval_mode(basis: SpectralBasis, i: int, x, deriv: int = 0):
    """Evaluate mode i (or a derivative) at position(s) x in [0, length]."""
    if not 0 <= i < basis.n:
        raise IndexError(f"mode index {i} out of range [0, {basis.n})")
    pts = np.asarray(x, dtype=float)
    if np.any(pts < 0.0) or np.any(pts > basis.length):
        raise ValueError(f"position outside [0, {basis.length}]")
    values = mode_matrix(basis, np.atleast_1d(pts), deriv=deriv)[i]
    if np.isscalar(x) or pts.ndim == 0:
        return float(values[0])
    return values


def trace(basis: SpectralBasis, i: int, end: End) -> float:
    """Boundary value w_i(0) or w_i(L)."""
    if not 0 <= i < basis.n:
        raise IndexError(f"mode index {i} out of range [0, {basis.n})")
    norm = basis.normalizations[i]
    if end is End.LEFT or i == 0:
        return float(norm)
    # cos(i*pi) alternates sign
    return float(norm if i % 2 == 0 else -norm)


def trace_vector(basis: SpectralBasis, end: End) -> np.ndarray:
    """Vector of boundary values of all modes at one end."""
    return np.array([trace(basis, i, end) for i in range(basis.n)])


def project(
    basis: SpectralBasis,
    quad: QuadratureRule,
    fn: Callable[[np.ndarray], np.ndarray],
) -> np.ndarray:
    """L2 projection coefficients c_i = sum_q rho_q f(x_q) w_i(x_q).

    ``fn`` must accept an ndarray of node positions and return values of the
    same shape.
    """
    values = np.asarray(fn(quad.nodes), dtype=float)
    values = np.broadcast_to(values, quad.nodes.shape)
    return mode_matrix(basis, quad.nodes) @ (quad.weights * values)


def _space_weights(basis: SpectralBasis, space: Space) -> np.ndarray:
    if space is Space.L2:
        return np.ones(basis.n)
    if space is Space.H1:
        return 1.0 + basis.eigenvalues
    if space is Space.H1_DUAL:
        return 1.0 / (1.0 + basis.eigenvalues)
    if space is Space.LAPLACIAN_L2:
        return basis.eigenvalues**2
    raise ValueError(f"unknown space tag {space!r}")


def norms(coeffs: np.ndarray, basis: SpectralBasis, space: Space | str) -> float | np.ndarray:
    """Sobolev-scale norm of one coefficient vector or a stack of them.

    L2          -> sqrt(sum xi_i^2)
    H1          -> sqrt(sum (1 + lambda_i) xi_i^2)
    H1dual      -> sqrt(sum xi_i^2 / (1 + lambda_i))
    LaplacianL2 -> sqrt(sum lambda_i^2 xi_i^2)

    For a (m, n) stack the norm is taken row-wise.
    """
    if isinstance(space, str):
        try:
            space = Space(space)
        except ValueError:
            raise ValueError(f"unknown space tag {space!r}") from None
    arr = np.asarray(coeffs, dtype=float)
    if arr.shape[-1] != basis.n:
        raise ValueError(f"coefficient length {arr.shape[-1]} does not match n = {basis.n}")
    weights = _space_weights(basis, space)
    result = np.sqrt(np.einsum("...i,i->...", arr**2, weights))
    if arr.ndim == 1:
        return float(result)
    return result

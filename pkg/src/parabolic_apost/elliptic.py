"""Stationary problem ``-(k y')' + r y = g`` and a max-norm a posteriori
estimator for its P1 approximation.

The estimator works element by element.  Inside an element the FE
function is linear, so the error ``e = y - y_h`` satisfies

    -(k e')' = R - r e,     R := g - r y_h + k' y_h',

where ``R`` is computable.  Splitting ``e`` into its nodal interpolant and a
remainder vanishing at the element ends, the interval Green's function
gives for the remainder

    |z| <= h_i^2 / (8 k_min) * (sup |R| + sup r * ||e||_inf).

With a reaction term P1 is not nodally exact, so the nodal part is bounded
separately.  Writing ``e(x_n) = sum_i int R (G_n - I_h G_n)`` with the
Green's function ``G_n`` of the stationary operator, ``k G_n'' = r G_n``
away from ``x_n`` and ``int r G_n <= min(1, ||r|| L^2 / (8 k))`` give

    max_n |e(x_n)| <= rho * eta0,   eta0 := max_i h_i^2 sup_i |R| / (8 k_min),

with ``rho = min(1, ||r||_inf L^2 / (8 k_min))``.  Altogether

    ||e||_inf <= (1 + rho) * eta0 / (1 - max_i h_i^2 ||r||_inf / (8 k_min)).

For ``r = 0`` the nodal term drops out.  The argument is exact for constant
``k``; for variable ``k`` the derivative term in ``R`` and the midpoint
stiffness are resolution-level approximations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from .fem1d import SpatialMesh, assemble_mass, assemble_stiffness, load_vector, solve_tridiag
from .problem import Problem

ELEMENT_SAMPLES = 8  # 9 evenly spaced points per element


class MeshTooCoarseError(ValueError):
    pass


@dataclass
class EllipticEstimate:
    eta: float
    per_element: np.ndarray
    safety: float = 1.0
    nodal_factor: float = 0.0

    def __float__(self):
        return self.eta


class EllipticEstimator(Protocol):
    def __call__(self, p: Problem, mesh: SpatialMesh, y_h: np.ndarray, g) -> EllipticEstimate: ...


def solve_elliptic(p: Problem, mesh: SpatialMesh, g, lumped: bool = False) -> np.ndarray:
    """P1 solution of ``a_h(y_h, chi) = <g, chi>_h``.

    ``g`` is either a callable of ``x`` or an interior nodal vector, in which
    case it is read as a P1 function.
    """
    A = assemble_stiffness(p, mesh)
    if callable(g):
        rhs = load_vector(mesh, g, lumped=lumped)
    else:
        rhs = assemble_mass(p, mesh, lumped=lumped) @ np.asarray(g, dtype=float)
    return solve_tridiag(A, rhs)


class ElementCoefficients:
    """Coefficient samples on a fixed mesh, cached so that the many estimator
    calls of a parabolic run do not re-evaluate ``k`` and ``r``."""

    def __init__(self, p: Problem, mesh: SpatialMesh, samples: int = ELEMENT_SAMPLES):
        self.mesh = mesh
        self.points = mesh.sample_points(samples)
        self.reaction = np.asarray(p.reaction(self.points), dtype=float)
        k = np.asarray(p.diffusion(self.points), dtype=float)
        self.kmin = k.min(axis=1)
        step = 1e-6 * mesh.h[:, None]
        dk = (
            np.asarray(p.diffusion(self.points + step), dtype=float)
            - np.asarray(p.diffusion(self.points - step), dtype=float)
        ) / (2.0 * step)
        self.dk = dk
        self.has_dk = bool(np.any(dk != 0.0))
        ratio = mesh.h**2 * self.reaction.max(axis=1) / (8.0 * self.kmin)
        self.coarseness = float(ratio.max())
        self.weight = mesh.h**2 / (8.0 * self.kmin)
        length = mesh.nodes[-1] - mesh.nodes[0]
        self.nodal_factor = min(
            1.0, float(self.reaction.max()) * length**2 / (8.0 * float(self.kmin.min()))
        )
        # barycentric coordinates of the sample points
        self._lam = (self.points - mesh.nodes[:-1, None]) / mesh.h[:, None]

    def p1_values(self, v: np.ndarray) -> np.ndarray:
        full = self.mesh.full(v)
        return full[:-1, None] * (1.0 - self._lam) + full[1:, None] * self._lam

    def estimate(self, y_h: np.ndarray, g_values: np.ndarray) -> EllipticEstimate:
        if self.coarseness >= 1.0:
            raise MeshTooCoarseError(
                f"h^2 ||r|| / 8 = {self.coarseness:.3g} >= 1: the mesh is too coarse "
                "for the estimator's safety factor"
            )
        resid = g_values - self.reaction * self.p1_values(y_h)
        if self.has_dk:
            resid = resid + self.dk * self.mesh.slopes(y_h)[:, None]
        per_element = self.weight * np.max(np.abs(resid), axis=1)
        safety = 1.0 / (1.0 - self.coarseness)
        eta0 = float(per_element.max()) if per_element.size else 0.0
        eta = safety * (1.0 + self.nodal_factor) * eta0
        return EllipticEstimate(eta, per_element, safety, self.nodal_factor)


def estimate_elliptic(
    p: Problem,
    mesh: SpatialMesh,
    y_h: np.ndarray,
    g: Callable[[np.ndarray], np.ndarray],
    samples: int = ELEMENT_SAMPLES,
) -> EllipticEstimate:
    """Bound for ``||y - y_h||_inf`` where ``y`` solves the continuous problem
    with right-hand side ``g``.

    Raises ``MeshTooCoarseError`` when ``h^2 ||r||_inf / 8 >= 1``.
    """
    coeffs = ElementCoefficients(p, mesh, samples)
    return coeffs.estimate(y_h, np.asarray(g(coeffs.points), dtype=float))

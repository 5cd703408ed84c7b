"""P1 finite elements on a 1D mesh with homogeneous Dirichlet conditions.

Nodal vectors hold values at the interior nodes ``x_1 .. x_{N-1}`` only;
boundary values are implicitly zero.  All matrices are tridiagonal.

Two choices of the discrete scalar product are supported:

* ``"consistent"``: 2-point Gauss quadrature per element, which is exact
  for products of two P1 functions, so the mass matrix is the exact one;
* ``"lumped"``: nodal (trapezoidal) quadrature, giving a diagonal mass
  matrix.  The same rule is then used for load vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .problem import Problem

GAUSS_OFFSET = 0.5 / np.sqrt(3.0)
MASS_MODES = ("consistent", "lumped")


class SingularMatrixError(ArithmeticError):
    pass


class SpatialMesh:
    """Nodes ``a = x_0 < x_1 < ... < x_N = b``."""

    def __init__(self, nodes):
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 3:
            raise ValueError("a spatial mesh needs N >= 2 elements")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("mesh nodes must be strictly increasing")
        self.nodes = nodes
        self.nodes.setflags(write=False)
        self.h = np.diff(nodes)
        self.h.setflags(write=False)
        self._gauss = None

    @classmethod
    def uniform(cls, left: float, right: float, elements: int) -> "SpatialMesh":
        nodes = np.linspace(left, right, elements + 1)
        nodes[0], nodes[-1] = left, right
        return cls(nodes)

    @property
    def N(self) -> int:
        return self.nodes.size - 1

    @property
    def interior(self) -> np.ndarray:
        return self.nodes[1:-1]

    @property
    def hmax(self) -> float:
        return float(self.h.max())

    def gauss_points(self):
        """Return ``(points, weights)`` with shape ``(N, 2)`` each."""
        if self._gauss is None:
            mid = 0.5 * (self.nodes[:-1] + self.nodes[1:])
            off = GAUSS_OFFSET * self.h
            pts = np.stack([mid - off, mid + off], axis=1)
            wts = np.repeat(0.5 * self.h[:, None], 2, axis=1)
            lam = (pts - self.nodes[:-1, None]) / self.h[:, None]
            # load weights w * phi_left and w * phi_right at the Gauss points
            self._gauss = (pts, wts, wts * (1.0 - lam), wts * lam)
            for a in self._gauss:
                a.setflags(write=False)
        return self._gauss[0], self._gauss[1]

    def sample_points(self, per_element: int = 7) -> np.ndarray:
        """``x_{i-1} + r h_i / per_element`` for r = 0..per_element; shape (N, s+1)."""
        r = np.arange(per_element + 1) / per_element
        return self.nodes[:-1, None] + self.h[:, None] * r[None, :]

    def full(self, v: np.ndarray) -> np.ndarray:
        """Pad an interior nodal vector with the zero boundary values."""
        out = np.zeros(self.nodes.size)
        out[1:-1] = v
        return out

    def evaluate(self, v: np.ndarray, x) -> np.ndarray:
        """Evaluate the P1 function with interior nodal values ``v`` at ``x``."""
        x = np.asarray(x, dtype=float)
        return np.interp(x.ravel(), self.nodes, self.full(v)).reshape(x.shape)

    def slopes(self, v: np.ndarray) -> np.ndarray:
        """Elementwise derivative of the P1 function, shape (N,)."""
        return np.diff(self.full(v)) / self.h

    def interpolate(self, fn) -> np.ndarray:
        return np.asarray(fn(self.interior), dtype=float).copy()

    def __repr__(self):
        return f"SpatialMesh(N={self.N}, [{self.nodes[0]}, {self.nodes[-1]}])"


@dataclass
class TriDiagMatrix:
    """Tridiagonal matrix stored by diagonals: ``sub[i] = A[i+1, i]``,
    ``sup[i] = A[i, i+1]``."""

    sub: np.ndarray
    main: np.ndarray
    sup: np.ndarray

    def __post_init__(self):
        self.sub = np.asarray(self.sub, dtype=float)
        self.main = np.asarray(self.main, dtype=float)
        self.sup = np.asarray(self.sup, dtype=float)
        n = self.main.size
        if self.sub.size != n - 1 or self.sup.size != n - 1:
            raise ValueError("diagonal lengths do not match")

    @property
    def n(self) -> int:
        return self.main.size

    def __matmul__(self, v):
        v = np.asarray(v, dtype=float)
        out = self.main * v
        out[:-1] += self.sup * v[1:]
        out[1:] += self.sub * v[:-1]
        return out

    def combine(self, alpha: float, other: "TriDiagMatrix", beta: float) -> "TriDiagMatrix":
        """Return ``alpha * self + beta * other``."""
        return TriDiagMatrix(
            alpha * self.sub + beta * other.sub,
            alpha * self.main + beta * other.main,
            alpha * self.sup + beta * other.sup,
        )

    def __add__(self, other):
        return self.combine(1.0, other, 1.0)

    def __mul__(self, c: float):
        return TriDiagMatrix(c * self.sub, c * self.main, c * self.sup)

    __rmul__ = __mul__

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.sub, self.sup))

    def todense(self) -> np.ndarray:
        return np.diag(self.main) + np.diag(self.sub, -1) + np.diag(self.sup, 1)

    def factor(self) -> "TriDiagFactor":
        return TriDiagFactor(self)


class TriDiagFactor:
    """LU factorisation of a tridiagonal matrix, reusable for many solves."""

    def __init__(self, mat: TriDiagMatrix):
        self.n = mat.n
        if self.n <= 2:
            # the LAPACK wrapper rejects n = 2 (its du2 work array would be empty)
            self._dense = mat.todense()
            if np.linalg.det(self._dense) == 0.0:
                raise SingularMatrixError(f"singular {self.n}x{self.n} system")
            return
        dl, d, du, du2, ipiv, info = lapack.dgttrf(mat.sub, mat.main, mat.sup)
        if info != 0:
            raise SingularMatrixError(f"zero pivot at row {info - 1}")
        self._lu = (dl, d, du, du2, ipiv)

    def solve(self, rhs) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        if self.n <= 2:
            return np.linalg.solve(self._dense, rhs)
        x, info = lapack.dgttrs(*self._lu, rhs)
        if info != 0:
            raise SingularMatrixError(f"dgttrs failed with info={info}")
        return x


def solve_tridiag(mat: TriDiagMatrix, rhs) -> np.ndarray:
    """Solve ``mat @ x = rhs``; raises ``SingularMatrixError`` on a zero pivot."""
    return mat.factor().solve(rhs)


def _scatter(mesh: SpatialMesh, local: np.ndarray) -> TriDiagMatrix:
    """Assemble element matrices ``local[e] = [[m00, m01], [m10, m11]]``
    (shape (N, 2, 2)) into the interior-node tridiagonal matrix."""
    main = local[:-1, 1, 1] + local[1:, 0, 0]
    sup = local[1:-1, 0, 1].copy()
    sub = local[1:-1, 1, 0].copy()
    return TriDiagMatrix(sub, main, sup)


def _p1_basis_at(mesh: SpatialMesh, pts: np.ndarray):
    left = mesh.nodes[:-1, None]
    lam = (pts - left) / mesh.h[:, None]
    return 1.0 - lam, lam


def assemble_stiffness(p: Problem, mesh: SpatialMesh) -> TriDiagMatrix:
    """Matrix of ``a_h(phi_j, phi_i)``.

    Diffusion: exact integration with the coefficient frozen at element
    midpoints.  Reaction: 2-point Gauss per element.
    """
    mid = 0.5 * (mesh.nodes[:-1] + mesh.nodes[1:])
    k = np.asarray(p.diffusion(mid), dtype=float) / mesh.h
    local = np.empty((mesh.N, 2, 2))
    local[:, 0, 0] = k
    local[:, 1, 1] = k
    local[:, 0, 1] = -k
    local[:, 1, 0] = -k

    pts, wts = mesh.gauss_points()
    r = np.asarray(p.reaction(pts), dtype=float) * wts
    b0, b1 = _p1_basis_at(mesh, pts)
    local[:, 0, 0] += np.sum(r * b0 * b0, axis=1)
    local[:, 1, 1] += np.sum(r * b1 * b1, axis=1)
    cross = np.sum(r * b0 * b1, axis=1)
    local[:, 0, 1] += cross
    local[:, 1, 0] += cross
    return _scatter(mesh, local)


def assemble_mass(p: Problem | None, mesh: SpatialMesh, lumped: bool = False) -> TriDiagMatrix:
    """Mass matrix of ``<.,.>_h``; consistent by default, or lumped (row sums)."""
    h = mesh.h
    if lumped:
        main = 0.5 * (h[:-1] + h[1:])
        z = np.zeros(mesh.N - 2)
        return TriDiagMatrix(z, main, z.copy())
    local = np.empty((mesh.N, 2, 2))
    local[:, 0, 0] = local[:, 1, 1] = h / 3.0
    local[:, 0, 1] = local[:, 1, 0] = h / 6.0
    return _scatter(mesh, local)


def load_vector(mesh: SpatialMesh, g, lumped: bool = False) -> np.ndarray:
    """``<g, phi_i>_h`` for a callable ``g(x)`` under the chosen quadrature."""
    if lumped:
        w = 0.5 * (mesh.h[:-1] + mesh.h[1:])
        return w * np.asarray(g(mesh.interior), dtype=float)
    pts, _ = mesh.gauss_points()
    _, _, wl, wr = mesh._gauss
    gv = np.asarray(g(pts), dtype=float)
    # element e contributes to its right node e and left node e+1
    gr = gv[:, 0] * wr[:, 0] + gv[:, 1] * wr[:, 1]
    gl = gv[:, 0] * wl[:, 0] + gv[:, 1] * wl[:, 1]
    return gr[:-1] + gl[1:]


def supnorm_sampled(v, mesh, samples_per_element: int = 7) -> float:
    """Max of ``|v|`` over ``samples_per_element + 1`` evenly spaced points per
    element (endpoints included).  ``mesh`` may be a ``SpatialMesh`` or a
    plain node array; ``v`` is a vectorised callable."""
    if samples_per_element < 2:
        raise ValueError("need at least 2 samples per element")
    if not isinstance(mesh, SpatialMesh):
        nodes = np.asarray(mesh, dtype=float)
        r = np.arange(samples_per_element + 1) / samples_per_element
        pts = nodes[:-1, None] + np.diff(nodes)[:, None] * r[None, :]
    else:
        pts = mesh.sample_points(samples_per_element)
    vals = np.asarray(v(pts), dtype=float)
    return float(np.max(np.abs(vals))) if vals.size else 0.0


def nodal_supnorm(v: np.ndarray) -> float:
    """Sup-norm of a P1 function: extrema sit at the nodes."""
    return float(np.max(np.abs(v))) if v.size else 0.0

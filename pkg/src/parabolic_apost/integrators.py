"""Time discretisations of the P1 semi-discrete system

    M u' + A u = F(t).

Every scheme advances ``u_h^{j-1} -> u_h^j`` with a few tridiagonal solves
(Lobatto IIIC needs one block solve).  Factorisations are cached per step
size, so a uniform run factors each matrix once.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fem1d import (
    MASS_MODES,
    SpatialMesh,
    TriDiagFactor,
    TriDiagMatrix,
    assemble_mass,
    assemble_stiffness,
    load_vector,
)
from .problem import Problem, TimeMesh

SDIRK_GAMMA = (2.0 - math.sqrt(2.0)) / 2.0


class SchemeId(str, enum.Enum):
    BACKWARD_EULER = "euler"
    CRANK_NICOLSON = "cn"
    EXTRAPOLATED_EULER = "exeuler"
    BDF2 = "bdf2"
    LOBATTO_IIIC = "lobatto3c"
    SDIRK2 = "sdirk2"

    @classmethod
    def parse(cls, name) -> "SchemeId":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ValueError(
                f"unknown method {name!r}; choose from {[s.value for s in cls]}"
            ) from None

    @property
    def order(self) -> int:
        return 1 if self is SchemeId.BACKWARD_EULER else 2

    @property
    def label(self) -> str:
        return _LABELS[self]


_LABELS = {
    SchemeId.BACKWARD_EULER: "Euler",
    SchemeId.CRANK_NICOLSON: "Crank-Nicolson",
    SchemeId.EXTRAPOLATED_EULER: "Extrapolated Euler",
    SchemeId.BDF2: "BDF-2",
    SchemeId.LOBATTO_IIIC: "Lobatto IIIC",
    SchemeId.SDIRK2: "SDIRK",
}


def _key(x: float) -> float:
    # uniform meshes yield step sizes differing in the last bits
    return float(f"{x:.12e}")


class Discretisation:
    """Assembled mass/stiffness matrices plus the load ``t -> <f(t), phi_i>_h``."""

    def __init__(self, problem: Problem, mesh: SpatialMesh, mass: str = "consistent"):
        if mass not in MASS_MODES:
            raise ValueError(f"mass must be one of {MASS_MODES}")
        self.problem = problem
        self.mesh = mesh
        self.lumped = mass == "lumped"
        self.A = assemble_stiffness(problem, mesh)
        self.M = assemble_mass(problem, mesh, lumped=self.lumped)
        self._load_fn = lambda t: load_vector(
            mesh, lambda x: problem.source(x, t), lumped=self.lumped
        )
        self._factors: dict = {}
        self._loads: dict = {}

    @classmethod
    def from_matrices(cls, mass: TriDiagMatrix, stiffness: TriDiagMatrix, load=None):
        """A bare system without an underlying mesh (e.g. scalar surrogates)."""
        self = cls.__new__(cls)
        self.problem = None
        self.mesh = None
        self.lumped = False
        self.A = stiffness
        self.M = mass
        n = mass.n
        self._load_fn = load if load is not None else (lambda t: np.zeros(n))
        self._factors = {}
        self._loads = {}
        return self

    @property
    def n(self) -> int:
        return self.M.n

    def load(self, t: float) -> np.ndarray:
        F = self._loads.get(t)
        if F is None:
            if len(self._loads) > 8:
                self._loads.clear()
            F = np.asarray(self._load_fn(t), dtype=float)
            self._loads[t] = F
        return F

    def factor(self, coef: float) -> TriDiagFactor:
        """Factorisation of ``M + coef * A``."""
        k = ("tri", _key(coef))
        f = self._factors.get(k)
        if f is None:
            f = self.M.combine(1.0, self.A, coef).factor()
            self._factors[k] = f
        return f

    def mass_solve(self, rhs) -> np.ndarray:
        k = ("mass",)
        f = self._factors.get(k)
        if f is None:
            f = self.M.factor()
            self._factors[k] = f
        return f.solve(rhs)

    def lobatto_factor(self, tau: float):
        k = ("lobatto", _key(tau))
        f = self._factors.get(k)
        if f is None:
            Ms = sp.diags([self.M.sub, self.M.main, self.M.sup], [-1, 0, 1], format="csc")
            As = sp.diags([self.A.sub, self.A.main, self.A.sup], [-1, 0, 1], format="csc")
            K = sp.bmat([[Ms + tau * As, -Ms], [Ms, Ms + tau * As]], format="csc")
            f = spla.splu(K)
            self._factors[k] = f
        return f


# --------------------------------------------------------------------------
# single steps


def _next(t_prev, tau, t_next):
    return t_prev + tau if t_next is None else t_next


def step_backward_euler(disc: Discretisation, u_prev, t_prev: float, tau: float, t_next=None):
    F = disc.load(_next(t_prev, tau, t_next))
    return disc.factor(tau).solve(disc.M @ u_prev + tau * F)


def step_crank_nicolson(disc: Discretisation, u_prev, t_prev: float, tau: float, t_next=None):
    F0, F1 = disc.load(t_prev), disc.load(_next(t_prev, tau, t_next))
    rhs = disc.M @ u_prev - 0.5 * tau * (disc.A @ u_prev) + 0.5 * tau * (F0 + F1)
    return disc.factor(0.5 * tau).solve(rhs)


def step_extrapolated_euler(
    disc: Discretisation, v_prev, w_prev, t_prev: float, tau: float, t_next=None
):
    """Returns ``(u, v, w_half, w)``: one Euler step of length ``tau`` for the
    v-sequence, two of length ``tau/2`` for the w-sequence, ``u = 2w - v``."""
    t_next = _next(t_prev, tau, t_next)
    v = step_backward_euler(disc, v_prev, t_prev, tau, t_next)
    half = 0.5 * tau
    w_half = step_backward_euler(disc, w_prev, t_prev, half)
    F1 = disc.load(t_next)
    w = disc.factor(half).solve(disc.M @ w_half + half * F1)
    return 2.0 * w - v, v, w_half, w


def bdf2_coefficients(tau: float, tau_prev: float) -> tuple[float, float]:
    alpha = (2.0 * tau + tau_prev) / (tau + tau_prev)
    beta = -tau / (tau + tau_prev)
    return alpha, beta


def step_bdf2(
    disc: Discretisation, u_prev, u_prev2, t_prev: float, tau: float, tau_prev: float, t_next=None
):
    """Variable-step BDF-2: ``M D_t u^j + A u^j = F^j`` with
    ``D_t u^j = alpha (u^j - u^{j-1}) / tau + beta (u^{j-1} - u^{j-2}) / tau_prev``."""
    alpha, beta = bdf2_coefficients(tau, tau_prev)
    c = tau / alpha
    hist = u_prev - (beta * tau / (alpha * tau_prev)) * (u_prev - u_prev2)
    F = disc.load(_next(t_prev, tau, t_next))
    return disc.factor(c).solve(disc.M @ hist + c * F)


def step_lobatto_iiic(disc: Discretisation, u_prev, t_prev: float, tau: float, t_next=None):
    """Two-stage Lobatto IIIC.  Returns ``(u, v)``.

    Solves the pair

        M (u - v) / tau + A u = F^j,
        M (u + v - 2 u_prev) / tau + A v = F^{j-1},

    which is the difference and the sum of the two stage equations.
    """
    F0, F1 = disc.load(t_prev), disc.load(_next(t_prev, tau, t_next))
    rhs = np.concatenate([tau * F1, tau * F0 + 2.0 * (disc.M @ u_prev)])
    sol = disc.lobatto_factor(tau).solve(rhs)
    n = disc.n
    return sol[:n].copy(), sol[n:].copy()


def step_sdirk2(
    disc: Discretisation, u_prev, t_prev: float, tau: float, fhat: bool = True, t_next=None
):
    """Two-stage SDIRK with gamma = (2 - sqrt 2) / 2.  Returns ``(u, k1, k2)``.

    With ``fhat`` the stage loads use the piecewise-linear interpolant of the
    load in time, i.e. only loads at mesh points are needed.
    """
    g = SDIRK_GAMMA
    if fhat:
        F0, F1 = disc.load(t_prev), disc.load(_next(t_prev, tau, t_next))
        Fa = (1.0 - g) * F0 + g * F1
        Fb = g * F0 + (1.0 - g) * F1
    else:
        Fa = disc.load(t_prev + g * tau)
        Fb = disc.load(t_prev + (1.0 - g) * tau)
    fac = disc.factor(g * tau)
    Au = disc.A @ u_prev
    k1 = fac.solve(Fa - Au)
    k2 = fac.solve(Fb - Au - (1.0 - 2.0 * g) * tau * (disc.A @ k1))
    return u_prev + 0.5 * tau * (k1 + k2), k1, k2


# --------------------------------------------------------------------------
# full runs


@dataclass
class Trajectory:
    """States ``u_h^0..u_h^M`` (rows) plus scheme-specific stage data.

    Stage arrays named ``v``/``w`` for extrapolated Euler hold whole
    sequences including index 0; every other stage array has one row per
    step ``j = 1..M`` stored at row ``j - 1``.
    """

    scheme: SchemeId
    tmesh: TimeMesh
    states: np.ndarray
    stages: dict = field(default_factory=dict)
    sdirk_fhat: bool = True

    @property
    def M(self) -> int:
        return self.tmesh.M

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def delta_t(self, j: int) -> np.ndarray:
        return (self.states[j] - self.states[j - 1]) / self.tmesh.tau[j - 1]


def initial_state(p: Problem, mesh: SpatialMesh) -> np.ndarray:
    """Nodal interpolant of the initial data."""
    return mesh.interpolate(p.initial)


def integrate(
    scheme,
    disc: Discretisation,
    tmesh: TimeMesh,
    u0: np.ndarray | None = None,
    sdirk_fhat: bool = True,
) -> Trajectory:
    scheme = SchemeId.parse(scheme)
    if u0 is None:
        u0 = initial_state(disc.problem, disc.mesh)
    t, tau = tmesh.nodes, tmesh.tau
    M, n = tmesh.M, disc.n
    U = np.empty((M + 1, n))
    U[0] = u0
    stages: dict = {}

    if scheme is SchemeId.BACKWARD_EULER:
        for j in range(1, M + 1):
            U[j] = step_backward_euler(disc, U[j - 1], t[j - 1], tau[j - 1], t[j])
    elif scheme is SchemeId.CRANK_NICOLSON:
        for j in range(1, M + 1):
            U[j] = step_crank_nicolson(disc, U[j - 1], t[j - 1], tau[j - 1], t[j])
    elif scheme is SchemeId.EXTRAPOLATED_EULER:
        V = np.empty((M + 1, n))
        W = np.empty((M + 1, n))
        Wh = np.empty((M, n))
        V[0] = W[0] = u0
        for j in range(1, M + 1):
            U[j], V[j], Wh[j - 1], W[j] = step_extrapolated_euler(
                disc, V[j - 1], W[j - 1], t[j - 1], tau[j - 1], t[j]
            )
        stages = {"v": V, "w": W, "w_half": Wh}
    elif scheme is SchemeId.BDF2:
        U[1] = step_backward_euler(disc, U[0], t[0], tau[0], t[1])
        for j in range(2, M + 1):
            U[j] = step_bdf2(
                disc, U[j - 1], U[j - 2], t[j - 1], tau[j - 1], tau[j - 2], t[j]
            )
    elif scheme is SchemeId.LOBATTO_IIIC:
        V = np.empty((M, n))
        for j in range(1, M + 1):
            U[j], V[j - 1] = step_lobatto_iiic(disc, U[j - 1], t[j - 1], tau[j - 1], t[j])
        stages = {"v": V}
    elif scheme is SchemeId.SDIRK2:
        K1 = np.empty((M, n))
        K2 = np.empty((M, n))
        for j in range(1, M + 1):
            U[j], K1[j - 1], K2[j - 1] = step_sdirk2(
                disc, U[j - 1], t[j - 1], tau[j - 1], fhat=sdirk_fhat, t_next=t[j]
            )
        stages = {"k1": K1, "k2": K2}
    return Trajectory(scheme, tmesh, U, stages, sdirk_fhat=sdirk_fhat)

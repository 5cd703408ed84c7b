"""Problem data for 1D linear parabolic equations.

The model problem is

    u_t - (k u_x)_x + r u = f   in (a, b) x (0, T],
    u(., 0) = u0,               u(a, t) = u(b, t) = 0,

with diffusion ``k > 0`` and reaction ``r >= 0``.  The estimator never sees
the Green's function of the parabolic operator, only the constants of its
L1 bounds (``GreenBounds``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

ScalarFn = Callable[[np.ndarray], np.ndarray]
SourceFn = Callable[[np.ndarray, float], np.ndarray]


class ProblemError(ValueError):
    pass


@dataclass(frozen=True)
class Problem:
    """A 1D reaction-diffusion problem with homogeneous Dirichlet data.

    All coefficient callables must accept numpy arrays and evaluate
    elementwise.  ``source`` takes ``(x, t)`` with scalar ``t``.
    """

    domain_left: float
    domain_right: float
    diffusion: ScalarFn
    reaction: ScalarFn
    source: SourceFn
    initial: ScalarFn
    final_time: float
    name: str = "custom"
    # known exact solution u(x, t), only for manufactured problems
    exact: SourceFn | None = field(default=None, compare=False)

    def __post_init__(self):
        a, b = self.domain_left, self.domain_right
        if not a < b:
            raise ProblemError(f"empty domain ({a}, {b})")
        if not self.final_time > 0:
            raise ProblemError("final_time must be positive")
        x = np.linspace(a, b, 257)
        ends = np.asarray(self.initial(np.array([a, b])), dtype=float)
        scale = max(1.0, float(np.max(np.abs(self.initial(x)))))
        # allow rounding such as sin(pi) = 1.2e-16
        if np.any(np.abs(ends) > 1e-12 * scale):
            raise ProblemError(
                f"initial data must vanish at both endpoints, got {ends.tolist()}"
            )
        if np.any(np.asarray(self.diffusion(x)) <= 0):
            raise ProblemError("diffusion must be strictly positive")
        if np.any(np.asarray(self.reaction(x)) < 0):
            raise ProblemError("reaction must be non-negative")

    @property
    def length(self) -> float:
        return self.domain_right - self.domain_left

    def reaction_max(self, samples: int = 1025) -> float:
        x = np.linspace(self.domain_left, self.domain_right, samples)
        return float(np.max(self.reaction(x)))


@dataclass(frozen=True)
class GreenBounds:
    """Constants of the bounds

        ||G(t)||_1     <= kappa0 exp(-gamma t)                  = phi0(t)
        ||d_t G(t)||_1 <= (kappa1 / t + kappa1prime) exp(-gamma t) = phi1(t)

    They are trusted as supplied; nothing here checks them against the
    actual Green's function.
    """

    kappa0: float
    kappa1: float
    kappa1prime: float
    gamma: float

    def __post_init__(self):
        for name in ("kappa0", "kappa1", "kappa1prime", "gamma"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ProblemError(f"{name} must be finite and non-negative, got {v}")
        if self.kappa0 <= 0:
            raise ProblemError("kappa0 must be positive")

    def phi0(self, t):
        return self.kappa0 * np.exp(-self.gamma * np.asarray(t, dtype=float))

    def phi1(self, t):
        t = np.asarray(t, dtype=float)
        if self.kappa1 > 0 and np.any(t <= 0):
            raise ProblemError("phi1 is singular at t = 0 when kappa1 > 0")
        with np.errstate(divide="ignore"):
            lead = np.where(t > 0, self.kappa1 / np.where(t > 0, t, 1.0), 0.0)
        return (lead + self.kappa1prime) * np.exp(-self.gamma * t)


def phi0(gb: GreenBounds, t):
    return gb.phi0(t)


def phi1(gb: GreenBounds, t):
    return gb.phi1(t)


class TimeMesh:
    """Temporal nodes ``0 = t_0 < t_1 < ... < t_M = T``."""

    def __init__(self, nodes):
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ProblemError("a time mesh needs at least two nodes")
        if nodes[0] != 0.0:
            raise ProblemError("time mesh must start at t = 0")
        if np.any(np.diff(nodes) <= 0):
            raise ProblemError("time nodes must be strictly increasing")
        self.nodes = nodes
        self.nodes.setflags(write=False)
        self.tau = np.diff(nodes)
        self.tau.setflags(write=False)

    @classmethod
    def uniform(cls, final_time: float, steps: int) -> "TimeMesh":
        nodes = np.linspace(0.0, final_time, steps + 1)
        nodes[-1] = final_time
        return cls(nodes)

    @property
    def M(self) -> int:
        return self.nodes.size - 1

    @property
    def final_time(self) -> float:
        return float(self.nodes[-1])

    def __len__(self):
        return self.nodes.size

    def __repr__(self):
        return f"TimeMesh(M={self.M}, T={self.final_time})"


# --------------------------------------------------------------------------
# built-in problems


def builtin_test_problem() -> tuple[Problem, GreenBounds]:
    """Reaction-diffusion benchmark on (-1, 1) x (0, 1].

    u_t - u_xx + (5x + 6) u = exp(-4t) + cos(pi (x + t)^2),
    u(x, 0) = sin(pi (1 + x) / 2).
    """
    pi = np.pi
    problem = Problem(
        domain_left=-1.0,
        domain_right=1.0,
        diffusion=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        reaction=lambda x: 5.0 * np.asarray(x, dtype=float) + 6.0,
        source=lambda x, t: np.exp(-4.0 * t) + np.cos(pi * (np.asarray(x) + t) ** 2),
        initial=_sin_half_wave,
        final_time=1.0,
        name="paper",
    )
    bounds = GreenBounds(kappa0=1.0, kappa1=3.0 / 2.0**1.5, kappa1prime=0.0, gamma=0.5)
    return problem, bounds


def _sin_half_wave(x):
    x = np.asarray(x, dtype=float)
    v = np.sin(np.pi * (1.0 + x) / 2.0)
    # sin(pi) is 1.2e-16 in floating point; the endpoint value is exactly 0
    return np.where((x == -1.0) | (x == 1.0), 0.0, v)


def manufactured_problem(decay: float = 1.0) -> tuple[Problem, GreenBounds]:
    """Same operator as the benchmark with exact solution
    u(x, t) = exp(-decay t) sin(pi (1 + x) / 2)."""
    pi = np.pi

    def exact(x, t):
        return np.exp(-decay * t) * _sin_half_wave(x)

    def source(x, t):
        x = np.asarray(x, dtype=float)
        u = exact(x, t)
        return (-decay + pi**2 / 4.0 + 5.0 * x + 6.0) * u

    problem = Problem(
        domain_left=-1.0,
        domain_right=1.0,
        diffusion=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        reaction=lambda x: 5.0 * np.asarray(x, dtype=float) + 6.0,
        source=source,
        initial=_sin_half_wave,
        final_time=1.0,
        name="manufactured",
        exact=exact,
    )
    bounds = GreenBounds(kappa0=1.0, kappa1=3.0 / 2.0**1.5, kappa1prime=0.0, gamma=0.5)
    return problem, bounds


PROBLEMS = {
    "paper": builtin_test_problem,
    "manufactured": manufactured_problem,
}


def get_problem(name: str) -> tuple[Problem, GreenBounds]:
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise ProblemError(
            f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}"
        ) from None

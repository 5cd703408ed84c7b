"""Scalar surrogate ``u' = -lam u`` and reference amplification factors."""

import numpy as np

from parabolic_apost.fem1d import TriDiagMatrix
from parabolic_apost.integrators import SDIRK_GAMMA, Discretisation, integrate
from parabolic_apost.problem import TimeMesh

G = SDIRK_GAMMA
BUTCHER = {
    "lobatto3c": (np.array([[0.5, -0.5], [0.5, 0.5]]), np.array([0.5, 0.5])),
    "sdirk2": (np.array([[G, 0.0], [1.0 - 2.0 * G, G]]), np.array([0.5, 0.5])),
}


def rk_amplification(A, b, z):
    """``R(-z) = 1 - z b^T (I + z A)^{-1} 1``."""
    e = np.ones(len(b))
    return 1.0 - z * b @ np.linalg.solve(np.eye(len(b)) + z * A, e)


def reference_R(scheme, z):
    if scheme == "euler":
        return 1.0 / (1.0 + z)
    if scheme == "cn":
        return (1.0 - z / 2.0) / (1.0 + z / 2.0)
    if scheme == "exeuler":
        return 2.0 / (1.0 + z / 2.0) ** 2 - 1.0 / (1.0 + z)
    if scheme == "lobatto3c":
        return 2.0 / (2.0 + 2.0 * z + z * z)
    A, b = BUTCHER[scheme]
    return rk_amplification(A, b, z)


def scalar_disc(lam):
    one = TriDiagMatrix(np.zeros(0), np.array([1.0]), np.zeros(0))
    stiff = TriDiagMatrix(np.zeros(0), np.array([lam]), np.zeros(0))
    return Discretisation.from_matrices(one, stiff)


def scalar_run(scheme, lam, nodes, u0=1.0):
    traj = integrate(scheme, scalar_disc(lam), TimeMesh(nodes), u0=np.array([u0]))
    return traj.states[:, 0]


def bdf2_reference(lam, nodes, u0=1.0):
    """Variable-step BDF-2 in the ratio form
    (1+2w)/(1+w) u^j - (1+w) u^{j-1} + w^2/(1+w) u^{j-2} = -tau_j lam u^j,
    started with one backward Euler step."""
    tau = np.diff(nodes)
    u = [u0, u0 / (1.0 + lam * tau[0])]
    for j in range(1, len(tau)):
        w = tau[j] / tau[j - 1]
        rhs = (1 + w) * u[-1] - w * w / (1 + w) * u[-2]
        u.append(rhs / ((1 + 2 * w) / (1 + w) + lam * tau[j]))
    return np.array(u)

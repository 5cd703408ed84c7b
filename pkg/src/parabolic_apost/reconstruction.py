"""Elliptic reconstruction data for a computed trajectory.

For every time level the discrete defect ``psi^j in V_h`` is defined by

    <psi^j, chi>_h = a_h(u_h^j, chi) - <f^j, chi>_h     for all chi in V_h,

so that ``u_h^j`` is the FE solution of the elliptic problem with data
``f^j + psi^j``.  Its exact solution (the reconstruction) is never formed;
only the elliptic estimator is applied to ``(u_h^j, f^j + psi^j)`` and to
the difference quotients ``(delta_t u_h^j, delta_t (f + psi)^j)``.

Each scheme also admits a closed form for ``psi^j`` (j >= 1) in terms of
its own stage data, which avoids a mass-matrix solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elliptic import ELEMENT_SAMPLES, ElementCoefficients
from .integrators import SDIRK_GAMMA, Discretisation, SchemeId, Trajectory


class ReconstructionError(RuntimeError):
    pass


@dataclass
class ReconstructionData:
    psi: np.ndarray  # (M+1, n)
    delta_psi: np.ndarray  # (M, n), row j-1 holds delta_t psi^j
    big_psi: np.ndarray  # (M, n)
    eta_ell: np.ndarray  # (M+1,)
    eta_ell_delta: np.ndarray  # (M,)


def psi_general(disc: Discretisation, u: np.ndarray, t: float) -> np.ndarray:
    """``psi = M^{-1} (A u - F(t))``."""
    return disc.mass_solve(disc.A @ u - disc.load(t))


def psi_closed_form(traj: Trajectory, j: int, psi_prev: np.ndarray | None = None) -> np.ndarray:
    """Scheme-specific formula for ``psi^j``, ``j >= 1``.

    Crank-Nicolson needs ``psi_prev = psi^{j-1}``.  SDIRK has a closed form
    only when its stage loads were built from the time-interpolated load.
    """
    if j < 1:
        raise ValueError("closed forms exist only for j >= 1")
    s = traj.scheme
    tau = traj.tmesh.tau[j - 1]
    U = traj.states
    du = (U[j] - U[j - 1]) / tau
    try:
        if s is SchemeId.BACKWARD_EULER:
            return -du
        if s is SchemeId.CRANK_NICOLSON:
            if psi_prev is None:
                raise ReconstructionError("Crank-Nicolson recursion needs psi^{j-1}")
            return -2.0 * du - psi_prev
        if s is SchemeId.EXTRAPOLATED_EULER:
            V, W, Wh = traj.stages["v"], traj.stages["w"], traj.stages["w_half"]
            return -4.0 * (W[j] - Wh[j - 1]) / tau + (V[j] - V[j - 1]) / tau
        if s is SchemeId.BDF2:
            return -du - tau * _second_difference(traj, j)
        if s is SchemeId.LOBATTO_IIIC:
            return (traj.stages["v"][j - 1] - U[j]) / tau
        if s is SchemeId.SDIRK2:
            if not traj.sdirk_fhat:
                raise ReconstructionError(
                    "SDIRK without interpolated loads has no closed form for psi"
                )
            k1, k2 = traj.stages["k1"][j - 1], traj.stages["k2"][j - 1]
            return (k1 - k2) / (2.0 * SDIRK_GAMMA) - k1
    except KeyError as exc:
        raise ReconstructionError(f"trajectory lacks stage data {exc} for {s.value}") from None
    raise ReconstructionError(f"no closed form for {s}")


def _second_difference(traj: Trajectory, j: int) -> np.ndarray:
    """``delta_t^2 u^j = (delta_t u^j - delta_t u^{j-1}) / (tau_j + tau_{j-1})``,
    set to zero for j = 1."""
    if j == 1:
        return np.zeros_like(traj.states[0])
    tau = traj.tmesh.tau
    return (traj.delta_t(j) - traj.delta_t(j - 1)) / (tau[j - 1] + tau[j - 2])


def has_closed_form(traj: Trajectory) -> bool:
    return traj.scheme is not SchemeId.SDIRK2 or traj.sdirk_fhat


def compute_psi(disc: Discretisation, traj: Trajectory, closed_form: bool = True) -> np.ndarray:
    t = traj.tmesh.nodes
    psi = np.empty_like(traj.states)
    psi[0] = psi_general(disc, traj.states[0], t[0])
    use_closed = closed_form and has_closed_form(traj)
    for j in range(1, traj.M + 1):
        if use_closed:
            psi[j] = psi_closed_form(traj, j, psi[j - 1])
        else:
            psi[j] = psi_general(disc, traj.states[j], t[j])
    return psi


def big_psi_definition(traj: Trajectory, psi: np.ndarray) -> np.ndarray:
    """``Psi^j = (psi^j + psi^{j-1}) / 2 + delta_t u_h^j``."""
    tau = traj.tmesh.tau[:, None]
    return 0.5 * (psi[1:] + psi[:-1]) + np.diff(traj.states, axis=0) / tau


def big_psi_closed_form(traj: Trajectory, delta_psi: np.ndarray) -> np.ndarray | None:
    """Scheme-specific ``Psi^j`` where one is known, else ``None``."""
    s = traj.scheme
    tau = traj.tmesh.tau[:, None]
    if s is SchemeId.CRANK_NICOLSON:
        return np.zeros_like(delta_psi)
    if s is SchemeId.BACKWARD_EULER:
        return -0.5 * tau * delta_psi
    if s is SchemeId.BDF2:
        d2 = np.stack([_second_difference(traj, j) for j in range(1, traj.M + 1)])
        return -0.5 * tau * delta_psi - tau * d2
    return None


def reconstruct(
    disc: Discretisation,
    traj: Trajectory,
    closed_form: bool = True,
    samples: int = ELEMENT_SAMPLES,
    check_tol: float = 1e-9,
) -> ReconstructionData:
    """Compute ``psi``, ``delta_t psi``, ``Psi`` and the elliptic estimates.

    Where a scheme has a closed form for ``Psi^j`` it is checked against the
    general definition (relative tolerance ``check_tol``) and then stored;
    this makes ``Psi`` exactly zero for Crank-Nicolson.
    """
    psi = compute_psi(disc, traj, closed_form)
    tau = traj.tmesh.tau[:, None]
    delta_psi = np.diff(psi, axis=0) / tau

    big = big_psi_definition(traj, psi)
    closed = big_psi_closed_form(traj, delta_psi)
    if closed is not None:
        scale = max(1.0, float(np.max(np.abs(psi))))
        gap = float(np.max(np.abs(big - closed))) if big.size else 0.0
        if gap > check_tol * scale:
            raise ReconstructionError(
                f"Psi definition and {traj.scheme.value} closed form differ by {gap:.3e}"
            )
        big = closed

    eta_ell, eta_ell_delta = eta_ell_all(disc, traj, psi, delta_psi, samples)
    return ReconstructionData(psi, delta_psi, big, eta_ell, eta_ell_delta)


def eta_ell_all(
    disc: Discretisation,
    traj: Trajectory,
    psi: np.ndarray,
    delta_psi: np.ndarray,
    samples: int = ELEMENT_SAMPLES,
) -> tuple[np.ndarray, np.ndarray]:
    """Elliptic estimates ``eta(u_h^j, f^j + psi^j)`` for j = 0..M and
    ``eta(delta_t u_h^j, delta_t f^j + delta_t psi^j)`` for j = 1..M.

    ``delta_t f`` is taken pointwise from exact evaluations of ``f``.
    """
    coeffs = ElementCoefficients(disc.problem, disc.mesh, samples)
    pts = coeffs.points
    src = disc.problem.source
    t, tau = traj.tmesh.nodes, traj.tmesh.tau
    M = traj.M
    eta = np.empty(M + 1)
    eta_d = np.empty(M)
    f_prev = np.asarray(src(pts, t[0]), dtype=float)
    eta[0] = coeffs.estimate(traj.states[0], f_prev + coeffs.p1_values(psi[0])).eta
    for j in range(1, M + 1):
        f_cur = np.asarray(src(pts, t[j]), dtype=float)
        eta[j] = coeffs.estimate(traj.states[j], f_cur + coeffs.p1_values(psi[j])).eta
        g_d = (f_cur - f_prev) / tau[j - 1] + coeffs.p1_values(delta_psi[j - 1])
        eta_d[j - 1] = coeffs.estimate(traj.delta_t(j), g_d).eta
        f_prev = f_cur
    return eta, eta_d

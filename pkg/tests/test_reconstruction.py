import numpy as np
import pytest

from parabolic_apost.elliptic import estimate_elliptic, solve_elliptic
from parabolic_apost.fem1d import SpatialMesh
from parabolic_apost.integrators import Discretisation, SchemeId, Trajectory, integrate
from parabolic_apost.problem import Problem, TimeMesh, builtin_test_problem
from parabolic_apost.reconstruction import (
    ReconstructionError,
    big_psi_closed_form,
    big_psi_definition,
    compute_psi,
    psi_closed_form,
    psi_general,
    reconstruct,
)

SCHEMES = [s.value for s in SchemeId]


def _benchmark_run(scheme, M=32, mass="consistent", fhat=True):
    p, _ = builtin_test_problem()
    disc = Discretisation(p, SpatialMesh.uniform(-1, 1, M), mass)
    traj = integrate(scheme, disc, TimeMesh.uniform(1.0, M), sdirk_fhat=fhat)
    return disc, traj


def _stationary_problem():
    return Problem(0.0, 1.0, lambda x: 1 + 0 * x, lambda x: 2 + x, lambda x, t: np.sin(3 * x) + 0 * t,
                   lambda x: 0 * x, 1.0)


def test_psi_of_zero_is_zero():
    z = lambda x: 0 * np.asarray(x, dtype=float)  # noqa: E731
    p = Problem(0.0, 1.0, lambda x: 1 + z(x), z, lambda x, t: z(x), z, 1.0)
    disc = Discretisation(p, SpatialMesh.uniform(0, 1, 8))
    assert np.all(psi_general(disc, np.zeros(7), 0.3) == 0.0)


def test_psi_of_discrete_elliptic_solution_vanishes():
    p = _stationary_problem()
    mesh = SpatialMesh.uniform(0, 1, 16)
    disc = Discretisation(p, mesh)
    yh = solve_elliptic(p, mesh, lambda x: p.source(x, 0.0))
    assert np.max(np.abs(psi_general(disc, yh, 0.0))) < 1e-12


def test_euler_closed_form_example():
    traj = Trajectory(SchemeId.BACKWARD_EULER, TimeMesh([0.0, 0.5]), np.array([[0.2], [0.1]]))
    assert psi_closed_form(traj, 1)[0] == pytest.approx(0.2)


def test_sdirk_equal_stages():
    k = np.array([[0.3, -1.2]])
    traj = Trajectory(SchemeId.SDIRK2, TimeMesh([0.0, 0.1]), np.zeros((2, 2)),
                      stages={"k1": k, "k2": k.copy()})
    assert np.allclose(psi_closed_form(traj, 1), -k[0])


def test_sdirk_without_fhat_has_no_closed_form():
    disc, traj = _benchmark_run("sdirk2", M=8, fhat=False)
    with pytest.raises(ReconstructionError):
        psi_closed_form(traj, 1)
    # reconstruction falls back to the mass-matrix solve
    general = compute_psi(disc, traj, closed_form=False)
    assert np.array_equal(compute_psi(disc, traj), general)


def test_cn_closed_form_needs_previous_psi():
    _, traj = _benchmark_run("cn", M=4)
    with pytest.raises(ReconstructionError):
        psi_closed_form(traj, 1)


@pytest.mark.parametrize("mass", ["consistent", "lumped"])
@pytest.mark.parametrize("scheme", SCHEMES)
def test_dual_formula_consistency(scheme, mass):
    disc, traj = _benchmark_run(scheme, mass=mass)
    closed = compute_psi(disc, traj, closed_form=True)
    general = compute_psi(disc, traj, closed_form=False)
    assert np.max(np.abs(closed - general)) <= 1e-9


def test_big_psi_closed_forms():
    for scheme in ("cn", "euler", "bdf2"):
        disc, traj = _benchmark_run(scheme)
        psi = compute_psi(disc, traj)
        dpsi = np.diff(psi, axis=0) / traj.tmesh.tau[:, None]
        closed = big_psi_closed_form(traj, dpsi)
        assert np.max(np.abs(closed - big_psi_definition(traj, psi))) <= 1e-9
    assert np.all(reconstruct(*_benchmark_run("cn")).big_psi == 0.0)


def test_euler_big_psi_constant_delta():
    traj = Trajectory(SchemeId.BACKWARD_EULER, TimeMesh([0.0, 0.25, 0.5]), np.zeros((3, 2)))
    c = 0.8
    out = big_psi_closed_form(traj, np.full((2, 2), c))
    assert np.allclose(out, -0.25 * c / 2)


def test_no_big_psi_closed_form_for_rk():
    _, traj = _benchmark_run("lobatto3c", M=4)
    assert big_psi_closed_form(traj, np.zeros((4, 3))) is None


def test_stationary_trajectory_reduces_to_elliptic_estimate():
    p = _stationary_problem()
    mesh = SpatialMesh.uniform(0, 1, 16)
    disc = Discretisation(p, mesh)
    g = lambda x: p.source(x, 0.0)  # noqa: E731
    yh = solve_elliptic(p, mesh, g)
    tm = TimeMesh.uniform(1.0, 4)
    traj = Trajectory(SchemeId.BACKWARD_EULER, tm, np.tile(yh, (5, 1)))
    data = reconstruct(disc, traj)
    plain = estimate_elliptic(p, mesh, yh, g).eta
    assert np.allclose(data.eta_ell, plain, rtol=1e-10)
    assert np.all(data.eta_ell_delta < 1e-10 * plain)


def test_zero_trajectory_zero_estimates():
    z = lambda x: 0 * np.asarray(x, dtype=float)  # noqa: E731
    p = Problem(0.0, 1.0, lambda x: 1 + z(x), z, lambda x, t: z(x), z, 1.0)
    disc = Discretisation(p, SpatialMesh.uniform(0, 1, 8))
    for s in SCHEMES:
        data = reconstruct(disc, integrate(s, disc, TimeMesh.uniform(1.0, 4)))
        assert np.all(data.eta_ell == 0) and np.all(data.eta_ell_delta == 0)

import math

import numpy as np
import pytest

from parabolic_apost.problem import (
    GreenBounds,
    Problem,
    ProblemError,
    TimeMesh,
    builtin_test_problem,
    get_problem,
    manufactured_problem,
    phi0,
    phi1,
)


def test_builtin_problem_values():
    p, gb = builtin_test_problem()
    assert p.initial(np.array(-1.0)) == 0.0
    assert p.initial(np.array(1.0)) == 0.0
    assert p.initial(np.array(0.0)) == pytest.approx(1.0)
    assert p.reaction(0.0) == 6.0
    assert gb.kappa1 == pytest.approx(1.06066, abs=1e-5)
    assert (gb.kappa0, gb.kappa1prime, gb.gamma) == (1.0, 0.0, 0.5)


def test_green_bound_functions():
    assert phi0(GreenBounds(1.0, 0.0, 0.0, 0.0), 7.3) == 1.0
    assert phi0(GreenBounds(1.0, 0.0, 0.0, 0.5), 1.0) == pytest.approx(math.exp(-0.5))
    assert phi1(GreenBounds(1.0, 1.0, 0.0, 0.0), 2.0) == 0.5
    gb = GreenBounds(1.0, 1.0, 0.0, 0.3)
    t = np.linspace(0.1, 3, 20)
    assert np.all(np.diff(gb.phi0(t)) <= 0)
    assert gb.phi1(1e-12) > 1e11
    with pytest.raises(ProblemError):
        gb.phi1(0.0)


@pytest.mark.parametrize("args", [(0, 1, 0, 0), (-1, 1, 0, 0), (1, -1, 0, 0), (1, 1, -1, 0), (1, 1, 0, -1)])
def test_green_bounds_validation(args):
    with pytest.raises(ProblemError):
        GreenBounds(*args)


def _ok(**over):
    kw = dict(
        domain_left=0.0,
        domain_right=1.0,
        diffusion=lambda x: 1 + 0 * x,
        reaction=lambda x: 0 * x,
        source=lambda x, t: 0 * x,
        initial=lambda x: np.sin(np.pi * x),
        final_time=1.0,
    )
    kw.update(over)
    return Problem(**kw)


def test_problem_validation():
    _ok()
    with pytest.raises(ProblemError):
        _ok(domain_right=0.0)
    with pytest.raises(ProblemError):
        _ok(diffusion=lambda x: 0 * x)
    with pytest.raises(ProblemError):
        _ok(reaction=lambda x: -1 + 0 * x)
    with pytest.raises(ProblemError):
        _ok(initial=lambda x: 1 + 0 * x)  # incompatible with the boundary condition
    with pytest.raises(ProblemError):
        _ok(final_time=0.0)


def test_time_mesh():
    tm = TimeMesh.uniform(1.0, 4)
    assert tm.M == 4 and tm.final_time == 1.0
    assert np.allclose(tm.tau, 0.25)
    with pytest.raises(ValueError):
        TimeMesh([0.0, 0.5, 0.5])
    with pytest.raises(ValueError):
        tm.nodes[1] = 3.0


def test_manufactured_source_consistent():
    p, _ = manufactured_problem(decay=2.0)
    x = np.linspace(-0.9, 0.9, 11)
    t, d = 0.3, 1e-5
    u = lambda x, t: p.exact(x, t)  # noqa: E731
    ut = (u(x, t + d) - u(x, t - d)) / (2 * d)
    uxx = (u(x + d, t) - 2 * u(x, t) + u(x - d, t)) / d**2
    residual = ut - uxx + p.reaction(x) * u(x, t) - p.source(x, t)
    assert np.max(np.abs(residual)) < 1e-4


def test_get_problem():
    assert get_problem("paper")[0].name == "paper"
    with pytest.raises(ProblemError):
        get_problem("nope")

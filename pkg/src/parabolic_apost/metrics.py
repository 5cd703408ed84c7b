"""Reference solutions, error measurement and convergence tables.

Studies couple the meshes as in the benchmark: ``M`` time steps and ``M``
spatial elements, i.e. ``tau = T/M`` and ``h = (b - a)/M``.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .estimator import EstimatorReport, estimate, fmt
from .fem1d import SpatialMesh, supnorm_sampled
from .integrators import Discretisation, SchemeId, Trajectory, integrate, step_crank_nicolson
from .problem import GreenBounds, Problem, TimeMesh
from .reconstruction import ReconstructionData, reconstruct

DESK_M_LIST = (64, 128, 256, 512, 1024)
FULL_M_LIST = DESK_M_LIST + (2048, 4096, 8192, 16384)
COMPONENTS = ("eta_init", "eta_f", "eta_ell_MK", "eta_Psi", "eta_dpsi")


class ReferenceSolution:
    """Final-time reference ``u(., T)`` from Richardson-extrapolated
    Crank-Nicolson.

    Runs with ``(N/2, M/2)`` and ``(N, M)`` are combined at the coarse
    nodes as ``(4 u_fine - u_coarse) / 3``, which cancels the leading
    ``h^2`` and ``tau^2`` terms.  Values between nodes come from a cubic
    spline through the extrapolated nodal values.
    """

    def __init__(self, problem: Problem, elements: int, steps: int, mass: str = "consistent"):
        if elements % 2 or steps % 2:
            raise ValueError("reference element and step counts must be even")
        self.problem = problem
        self.elements, self.steps = elements, steps
        coarse = _final_state(problem, elements // 2, steps // 2, mass)
        fine = _final_state(problem, elements, steps, mass)
        self.mesh = SpatialMesh.uniform(
            problem.domain_left, problem.domain_right, elements // 2
        )
        fine_at_coarse = fine[1::2]
        self.level_gap = float(np.max(np.abs(fine_at_coarse - coarse)))
        values = self.mesh.full((4.0 * fine_at_coarse - coarse) / 3.0)
        self._spline = CubicSpline(self.mesh.nodes, values)

    def __call__(self, x):
        return self._spline(np.asarray(x, dtype=float))


def _final_state(problem: Problem, elements: int, steps: int, mass: str) -> np.ndarray:
    mesh = SpatialMesh.uniform(problem.domain_left, problem.domain_right, elements)
    disc = Discretisation(problem, mesh, mass)
    tm = TimeMesh.uniform(problem.final_time, steps)
    # only the final state is needed, so step without storing the trajectory
    u = mesh.interpolate(problem.initial)
    t, tau = tm.nodes, tm.tau
    for j in range(1, tm.M + 1):
        u = step_crank_nicolson(disc, u, t[j - 1], tau[j - 1], t[j])
    return u


def reference_solution(
    problem: Problem,
    refinement: int = 8,
    finest_M: int = max(DESK_M_LIST),
    mass: str = "consistent",
) -> ReferenceSolution:
    """Reference on a mesh ``refinement`` times finer (in h and tau) than the
    finest study mesh, extrapolated with the level ``refinement / 2``."""
    if refinement < 2 or refinement % 2:
        raise ValueError("refinement must be an even integer >= 2")
    if refinement < 4:
        warnings.warn(
            f"reference refinement {refinement} < 4: reference error may pollute e_M "
            "for the finest meshes",
            stacklevel=2,
        )
    n = refinement * finest_M
    return ReferenceSolution(problem, n, n, mass)


def measure_error(uh: np.ndarray, reference, mesh: SpatialMesh, samples: int = 7) -> float:
    """``max_i max_{r=0..7} |(u - u_h)(x_{i-1} + r h_i / 7)|``."""
    return supnorm_sampled(lambda x: reference(x) - mesh.evaluate(uh, x), mesh, samples)


@dataclass
class RunResult:
    scheme: SchemeId
    mesh: SpatialMesh
    traj: Trajectory
    recon: ReconstructionData
    report: EstimatorReport


def run_scheme(
    problem: Problem,
    gb: GreenBounds,
    scheme,
    M: int,
    K: int | str = 0,
    mass: str = "consistent",
    sdirk_fhat: bool = True,
    elements: int | None = None,
) -> RunResult:
    """Solve with ``M`` uniform time steps on ``elements`` (default ``M``)
    uniform elements and evaluate the error estimator."""
    scheme = SchemeId.parse(scheme)
    mesh = SpatialMesh.uniform(problem.domain_left, problem.domain_right, elements or M)
    disc = Discretisation(problem, mesh, mass)
    tm = TimeMesh.uniform(problem.final_time, M)
    traj = integrate(scheme, disc, tm, sdirk_fhat=sdirk_fhat)
    recon = reconstruct(disc, traj)
    report = estimate(problem, gb, mesh, traj, recon, K=K)
    return RunResult(scheme, mesh, traj, recon, report)


@dataclass
class ConvergenceRow:
    M: int
    e_M: float
    eta: float
    p_M: float | None = None
    components: dict = field(default_factory=dict)

    @property
    def chi_M(self) -> float:
        return self.e_M / self.eta


def observed_order(coarse: float, fine: float, ratio: float = 2.0) -> float:
    return (math.log(coarse) - math.log(fine)) / math.log(ratio)


def convergence_study(
    problem: Problem,
    gb: GreenBounds,
    scheme,
    M_list=DESK_M_LIST,
    K: int | str = 0,
    mass: str = "consistent",
    sdirk_fhat: bool = True,
    reference=None,
    ref_refine: int = 8,
) -> list[ConvergenceRow]:
    """Error, estimator and efficiency for each ``M`` in ``M_list``.

    ``reference`` defaults to the problem's exact solution when it has one,
    otherwise to a Richardson reference built for ``max(M_list)``.
    """
    M_list = sorted(M_list)
    if not M_list:
        return []
    if reference is None:
        if problem.exact is not None:
            T = problem.final_time
            reference = lambda x: problem.exact(x, T)  # noqa: E731
        else:
            reference = reference_solution(problem, ref_refine, max(M_list), mass)
    rows: list[ConvergenceRow] = []
    for M in M_list:
        res = run_scheme(problem, gb, scheme, M, K, mass, sdirk_fhat)
        e = measure_error(res.traj.final, reference, res.mesh)
        row = ConvergenceRow(M, e, res.report.total, components=res.report.components())
        if rows:
            prev = rows[-1]
            row.p_M = observed_order(prev.e_M, e, M / prev.M)
        rows.append(row)
    return rows


# --------------------------------------------------------------------------
# table emitters


def efficiency_fraction(chi: float) -> str:
    """Render an efficiency as ``1/n`` with ``n`` rounded to the nearest integer."""
    return f"1/{round(1.0 / chi)}"


def _table1_cells(rows):
    for r in rows:
        yield [
            str(r.M),
            fmt(r.e_M),
            "" if r.p_M is None else f"{r.p_M:.2f}",
            fmt(r.eta),
            fmt(r.chi_M),
            efficiency_fraction(r.chi_M),
        ]


TABLE1_HEADER = ["M", "e_M", "p_M", "eta_M0", "chi_M", "chi_M_frac"]
TABLE2_HEADER = ["M", "eta_init", "eta_f", "eta_ell_M0", "eta_Psi", "eta_dpsi"]


def _table2_cells(rows, with_orders: bool):
    prev = None
    for r in rows:
        cells = [str(r.M)]
        for name in COMPONENTS:
            v = r.components[name]
            cell = fmt(v)
            if with_orders and prev is not None:
                pv = prev.components[name]
                if v > 0 and pv > 0:
                    cell += f" ({observed_order(pv, v, r.M / prev.M):.2f})"
            cells.append(cell)
        prev = r
        yield cells


def _csv(header, body) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    wr.writerows(body)
    return buf.getvalue()


def _markdown(header, body) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(cells) + " |" for cells in body]
    return "\n".join(lines) + "\n"


def table1_csv(rows) -> str:
    return _csv(TABLE1_HEADER, _table1_cells(rows))


def table1_markdown(rows) -> str:
    return _markdown(TABLE1_HEADER, _table1_cells(rows))


def table2_csv(rows) -> str:
    """Component table; orders go in their own columns to keep the CSV numeric."""
    header = ["M"]
    for name in COMPONENTS:
        header += [name, f"p_{name}"]
    body = []
    prev = None
    for r in rows:
        cells = [str(r.M)]
        for name in COMPONENTS:
            v = r.components[name]
            order = ""
            if prev is not None and v > 0 and prev.components[name] > 0:
                order = f"{observed_order(prev.components[name], v, r.M / prev.M):.2f}"
            cells += [fmt(v), order]
        prev = r
        body.append(cells)
    return _csv(header, body)


def table2_markdown(rows) -> str:
    return _markdown(TABLE2_HEADER, _table2_cells(rows, with_orders=True))

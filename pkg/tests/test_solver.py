"""Weighted-grid assembly and the projected relaxation solver."""

import json

import numpy as np
import pytest
import scipy.sparse as sparse

from fracsig.closed_forms import FracOrder, eval_w1s
from fracsig.errors import GridTooCoarse, NotConverged
from fracsig.solver import (
    ProblemSpec,
    WeightedGrid,
    assemble,
    auto_relaxation,
    complementarity_report,
    solution_from_samples,
    solve_vi,
)


def _model_spec(s=0.5, h=1.0 / 16.0):
    sv = FracOrder(s)
    grid = WeightedGrid(n=1, extents=((-1.0, 1.0), (0.0, 1.0)), h=h, s=sv)
    return ProblemSpec(
        grid=grid,
        obstacle=lambda *a: np.zeros_like(a[0]),
        dirichlet=lambda xn, z: eval_w1s(sv, xn, z),
    )


def test_grid_validation():
    with pytest.raises(ValueError):
        WeightedGrid(n=3, extents=((-1, 1), (-1, 1), (-1, 1), (0, 1)), h=0.1, s=0.5)
    with pytest.raises(ValueError):
        WeightedGrid(n=1, extents=((-1, 1), (0, 1)), h=-0.1, s=0.5)
    with pytest.raises(ValueError):
        WeightedGrid(n=1, extents=((-1, 1), (0.5, 1)), h=0.1, s=0.5)  # z must start at 0
    with pytest.raises(ValueError):
        WeightedGrid(n=1, extents=((-1, 1), (0, 1)), h=0.3, s=0.5)  # not a divisor
    with pytest.raises(ValueError):
        WeightedGrid(n=1, extents=((-1, 1),), h=0.1, s=0.5)  # missing vertical extent

    g = WeightedGrid(n=1, extents=((-1.0, 1.0), (0.0, 0.5)), h=0.25, s=0.3)
    assert g.weight_exponent == pytest.approx(1.0 - 2.0 * 0.3)
    assert g.shape == (9, 3)
    axes = g.axes()
    assert axes[0][0] == -1.0 and axes[0][-1] == 1.0
    assert axes[1][0] == 0.0 and axes[1][-1] == 0.5
    assert g.thin_points().shape == (9, 1)


def test_problem_spec_validates_rhs_form():
    g = WeightedGrid(n=1, extents=((-1.0, 1.0), (0.0, 1.0)), h=0.125, s=0.5)
    with pytest.raises(ValueError):
        ProblemSpec(grid=g, rhs_form="pointwise")
    ProblemSpec(grid=g, rhs_form="weighted")  # accepted


def test_assembly_rejects_too_coarse_grids():
    g = WeightedGrid(n=1, extents=((-1.0, 1.0), (0.0, 1.0)), h=0.5, s=0.5)
    with pytest.raises(GridTooCoarse):
        assemble(ProblemSpec(grid=g))


def test_assembled_operator_is_a_symmetric_m_matrix():
    asm = assemble(_model_spec())
    M = asm.matrix
    assert abs(M - M.T).max() == 0.0
    offdiag = M - sparse.diags(M.diagonal())
    assert offdiag.max() <= 0.0
    assert M.diagonal().min() > 0.0
    nfree = M.shape[0]
    assert asm.rhs.shape == (nfree,)
    assert asm.thin_mask.shape == (nfree,)
    # obstacle is -inf exactly where the constraint is absent (bulk nodes)
    assert np.all(np.isneginf(asm.obstacle[~asm.thin_mask]))
    assert np.all(asm.obstacle[asm.thin_mask] == 0.0)


def test_solver_parameter_validation():
    spec = _model_spec()
    with pytest.raises(ValueError):
        solve_vi(spec, omega=2.5)
    with pytest.raises(ValueError):
        solve_vi(spec, tol=-1.0)


def test_solver_recovers_the_explicit_profile(model_solution):
    sol32 = model_solution(0.5, 1.0 / 32.0)
    sol64 = model_solution(0.5, 1.0 / 64.0)
    errs = []
    for sol in (sol32, sol64):
        mesh = np.meshgrid(*sol.grid.axes(), indexing="ij")
        exact = np.asarray(eval_w1s(0.5, mesh[0], mesh[1]))
        errs.append(float(np.max(np.abs(sol.values - exact))))
    assert errs[1] < errs[0]
    assert errs[1] <= 1e-2
    assert sol64.comp_residual <= 1e-8
    assert sol64.iterations > 0
    assert np.isfinite(sol64.energy)
    # trace never dips below the zero obstacle and both phases are present
    thin = sol64.thin_values()
    assert thin.min() >= -1e-12
    assert 0.0 < sol64.contact_mask.mean() < 1.0


def test_complementarity_report_terms(model_solution):
    sol = model_solution(0.5, 1.0 / 32.0)
    rep = complementarity_report(sol)
    assert len(rep) == 3
    assert all(np.isfinite(t) for t in rep)
    assert rep[1] == sol.comp_residual
    assert max(rep) <= 1e-8


def test_nonconvergence_carries_the_best_iterate():
    spec = _model_spec()
    with pytest.raises(NotConverged) as exc:
        solve_vi(spec, max_iter=3)
    err = exc.value
    assert err.best is not None
    assert err.best.values.shape == spec.grid.shape
    assert set(err.residuals) == {"interior", "contact_sign"}
    assert err.residuals["interior"] > 0.0


def test_positive_load_pushes_the_trace_onto_the_obstacle():
    sv = FracOrder(0.5)
    g = WeightedGrid(n=1, extents=((-1.0, 1.0), (0.0, 1.0)), h=1.0 / 16.0, s=sv)
    spec = ProblemSpec(
        grid=g,
        f=lambda xn, z: 6.0 * np.ones_like(xn),
        rhs_form="volume",
        obstacle=lambda *a: np.zeros_like(a[0]),
        dirichlet=None,
    )
    sol = solve_vi(spec, tol=1e-11, omega="auto")
    assert np.max(np.abs(sol.thin_values())) <= 1e-12
    assert sol.contact_mask.mean() >= 0.9

    # flipping the load lifts the trace off the obstacle entirely
    spec2 = ProblemSpec(
        grid=g,
        f=lambda xn, z: -6.0 * np.ones_like(xn),
        rhs_form="volume",
        obstacle=lambda *a: np.zeros_like(a[0]),
        dirichlet=None,
    )
    sol2 = solve_vi(spec2, tol=1e-11, omega="auto")
    assert sol2.contact_mask.mean() == 0.0
    interior = sol2.thin_values()[1:-1]
    assert interior.min() > 0.0


def test_sampled_fields_round_trip():
    spec = _model_spec()
    sol = solution_from_samples(spec, lambda xn, z: eval_w1s(0.5, xn, z))
    mesh = np.meshgrid(*spec.grid.axes(), indexing="ij")
    assert np.array_equal(sol.values, np.asarray(eval_w1s(0.5, mesh[0], mesh[1])))
    assert sol.iterations == 0
    assert np.isfinite(sol.comp_residual)  # discrete residual of a sampled field
    lazy = solution_from_samples(spec, lambda xn, z: eval_w1s(0.5, xn, z),
                                 compute_residuals=False)
    assert np.isnan(lazy.comp_residual)


def test_two_dimensional_thin_space_solutions(model_solution):
    sol = model_solution(0.5, 1.0 / 8.0, n=2)
    assert sol.values.ndim == 3
    assert sol.comp_residual <= 1e-8
    thin = sol.thin_values()
    assert thin.shape == sol.values.shape[:2]
    # the data is x1-independent; the discrete trace picks up only a
    # discretization-sized variation (exact face data vs interior profile)
    assert np.max(np.abs(thin - thin[0][None, :])) <= 5e-3
    axes = sol.grid.axes()
    exact = np.asarray(eval_w1s(0.5, axes[1], 0.0))
    assert np.max(np.abs(thin - exact[None, :])) <= 5e-2


def test_solution_saves_csv_with_sidecar(tmp_path, model_solution):
    sol = model_solution(0.5, 1.0 / 32.0)
    csv_path = tmp_path / "run.csv"
    meta_path = tmp_path / "run.json"
    sol.save(str(csv_path), str(meta_path))
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "x1,z,value"
    assert len(lines) == 1 + sol.values.size
    meta = json.loads(meta_path.read_text())
    assert set(meta) == {"comp_residual", "energy", "extents", "h", "iterations", "s"}
    assert meta["s"] == 0.5
    assert meta["h"] == pytest.approx(1.0 / 32.0)


def test_auto_relaxation_stays_in_the_stable_band():
    for h in (1.0 / 8.0, 1.0 / 32.0, 1.0 / 128.0):
        g = WeightedGrid(n=1, extents=((-1.0, 1.0), (0.0, 1.0)), h=h, s=0.4)
        om = auto_relaxation(g)
        assert 1.0 < om < 2.0
    # finer grids need stronger over-relaxation
    g1 = WeightedGrid(n=1, extents=((-1.0, 1.0), (0.0, 1.0)), h=1.0 / 16.0, s=0.4)
    g2 = WeightedGrid(n=1, extents=((-1.0, 1.0), (0.0, 1.0)), h=1.0 / 64.0, s=0.4)
    assert auto_relaxation(g2) > auto_relaxation(g1)

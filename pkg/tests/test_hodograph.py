"""Hodograph transform, partial Legendre resampling and the functional F."""

import json

import numpy as np
import pytest

from fracsig import hodograph as ho
from fracsig.closed_forms import (
    FracOrder,
    eval_v_model,
    eval_w1s,
    v_model_jet,
)
from fracsig.errors import (
    DegenerateFit,
    MonotonicityViolated,
    NegativeRadicand,
    OutOfDomain,
    ResampleGap,
)
from fracsig.jets import variables
from fracsig.solver import ProblemSpec, WeightedGrid, solution_from_samples


def _fresh_samples(s, h, fn):
    sv = FracOrder(s)
    grid = WeightedGrid(n=1, extents=((-1.0, 1.0), (0.0, 1.0)), h=h, s=sv)
    spec = ProblemSpec(grid=grid, obstacle=lambda *a: np.zeros_like(a[0]))
    return solution_from_samples(spec, fn, compute_residuals=False)


def test_forward_transform_reproduces_the_dual_coordinates(model_solution):
    sol = model_solution(0.5, 1.0 / 64.0)
    y, x = ho.forward_transform(sol)
    assert y.shape == x.shape and y.shape[1] == 2
    # on the model, x_n = (y_n^2 - y_p^2)/2 and x_{n+1} = y_n y_p
    sel = (y[:, 0] > 0.15) & (y[:, 1] > 0.15)
    assert sel.sum() > 1000
    assert np.max(np.abs(0.5 * (y[sel, 0] ** 2 - y[sel, 1] ** 2) - x[sel, 0])) <= 5e-3
    assert np.max(np.abs(y[sel, 0] * y[sel, 1] - x[sel, 1])) <= 5e-3
    # the contact portion of the thin plane maps onto the axis y_n = 0
    contact = (x[:, 1] == 0.0) & (x[:, 0] < -0.1)
    assert contact.sum() > 0
    assert np.max(np.abs(y[contact, 0])) == 0.0


def test_forward_transform_requires_monotone_input():
    flipped = _fresh_samples(
        0.5, 1.0 / 32.0, lambda xn, z: -np.asarray(eval_w1s(0.5, xn, z))
    )
    with pytest.raises(MonotonicityViolated):
        ho.forward_transform(flipped)


@pytest.mark.parametrize("s", (0.3, 0.5, 0.7))
def test_resampled_legendre_field_tracks_the_model(s, model_solution):
    sol = model_solution(s, 1.0 / 64.0)
    field = ho.legendre_function(sol, ny=21)
    yn, yp = np.meshgrid(field.axes[-2], field.axes[-1], indexing="ij")
    ref = np.asarray(eval_v_model(s, yn, yp))
    err = np.max(np.abs(np.where(field.mask, field.v - ref, 0.0)))
    assert err <= 5e-2, (s, err)
    assert field.mask.mean() > 0.5
    assert np.min(field.xp) >= 0.0
    # both axes carry exact boundary values
    assert np.max(np.abs(field.v[0, :])) == 0.0
    assert np.max(np.abs(field.xp[0, :])) == 0.0
    assert np.max(np.abs(field.xp[:, 0])) == 0.0
    assert field.h_source == pytest.approx(1.0 / 64.0)


def test_resampling_reports_gaps_on_overambitious_grids(model_solution):
    sol = model_solution(0.5, 1.0 / 16.0)
    with pytest.raises(ResampleGap):
        ho.legendre_function(sol, ny=80)


def test_legendre_field_round_trips_through_csv(tmp_path, model_solution):
    sol = model_solution(0.5, 1.0 / 64.0)
    field = ho.legendre_function(sol, ny=21)
    csv = tmp_path / "v.csv"
    sidecar = tmp_path / "v.json"
    field.save(str(csv), str(sidecar))
    lines = csv.read_text().splitlines()
    assert lines[0] == "yn,ynp1,v,xn,xnp1,mask"
    assert len(lines) == 1 + field.v.size
    meta = json.loads(sidecar.read_text())
    assert meta["axis_role"] == "legendre-quarter-grid"
    assert set(meta) == {"axes", "axis_role", "h_source", "s", "shape"}
    assert meta["s"] == 0.5
    assert tuple(meta["shape"]) == field.v.shape


@pytest.mark.parametrize("s", (0.3, 0.5, 0.7))
def test_functional_vanishes_at_the_model_field(s):
    rng = np.random.default_rng(41)
    pts = np.column_stack([rng.uniform(0.1, 1.0, 500), rng.uniform(0.1, 1.0, 500)])
    res = ho.eval_F(lambda a, b: v_model_jet(s, a, b), points=pts, s=s)
    assert np.max(np.abs(res)) <= 1e-13


def test_functional_is_linear_exactly_at_one_half():
    # scaling the argument keeps the residual at zero iff F is linear; that
    # happens only at s = 1/2
    rng = np.random.default_rng(43)
    pts = np.column_stack([rng.uniform(0.1, 1.0, 400), rng.uniform(0.1, 1.0, 400)])
    scaled_half = ho.eval_F(lambda a, b: v_model_jet(0.5, a, b) * 1.1,
                            points=pts, s=0.5)
    assert np.max(np.abs(scaled_half)) <= 1e-13
    scaled_skew = ho.eval_F(lambda a, b: v_model_jet(0.3, a, b) * 1.1,
                            points=pts, s=0.3)
    assert np.max(np.abs(scaled_skew)) > 1e-3


def test_functional_wires_the_right_hand_side_through_the_inverse_map():
    s = 0.3
    rng = np.random.default_rng(47)
    pts = np.column_stack([rng.uniform(0.1, 1.0, 400), rng.uniform(0.1, 1.0, 400)])

    def v(a, b):
        return v_model_jet(s, a, b)

    def f(xn, xp):
        return np.cos(xn) * xp

    base = ho.eval_F(v, points=pts, s=s)
    with_f = ho.eval_F(v, f=f, points=pts, s=s)
    # at the model, the physical coordinates are (yn^2-yp^2)/2 and yn*yp and
    # the Jacobian factor is yn^2 + yp^2
    x_np1 = pts[:, 0] * pts[:, 1]
    x_n = 0.5 * (pts[:, 0] ** 2 - pts[:, 1] ** 2)
    expected = -(x_np1 ** (3.0 - 2.0 * s)) * (
        pts[:, 0] ** 2 + pts[:, 1] ** 2
    ) * f(x_n, x_np1)
    assert np.max(np.abs((with_f - base) - expected)) <= 1e-13


def test_functional_guards_its_domain():
    pts = np.array([[0.5, 0.5], [0.0, 0.5]])
    with pytest.raises(OutOfDomain):
        ho.eval_F(lambda a, b: v_model_jet(0.5, a, b), points=pts, s=0.5)
    with pytest.raises(ValueError):
        ho.eval_F(lambda a, b: v_model_jet(0.5, a, b), points=None, s=0.5)
    # a field with negative vertical slope has no inverse height
    good = np.array([[0.5, 0.5]])
    with pytest.raises(NegativeRadicand):
        ho.eval_F(lambda a, b: v_model_jet(0.5, a, b) * (-1.0), points=good, s=0.5)


def test_finite_difference_mode_agrees_on_resampled_fields(model_solution):
    sol = model_solution(0.5, 1.0 / 64.0)
    field = ho.legendre_function(sol, ny=21)
    res = ho.eval_F(field, mode="finite_difference")
    assert res.shape == field.v.shape
    inner = np.isfinite(res)
    assert inner.sum() > 20
    # discrete solution + resampling: small but not exactly zero
    assert np.max(np.abs(res[inner])) <= 5.0
    with pytest.raises(ValueError):
        ho.eval_F(field, mode="analytic")


def test_linearization_constant_is_stable_across_probes():
    s = 0.3
    rng = np.random.default_rng(53)
    pts = np.column_stack([rng.uniform(0.15, 0.85, 250), rng.uniform(0.15, 0.85, 250)])

    def v0(a, b):
        return v_model_jet(s, a, b)

    bump1 = ho.polynomial_bump((0.5, 0.5), 0.35, amplitude=0.03)
    bump2 = ho.polynomial_bump((0.6, 0.4), 0.30, amplitude=0.02)
    t_list = (1e-3, 1e-2, 1e-1)
    rep1 = ho.linearization_check(v0, bump1, t_list, pts, s=s)
    rep2 = ho.linearization_check(v0, bump2, t_list, pts, s=s)
    assert rep1.c == pytest.approx(1.0, abs=1e-3)
    assert abs(rep1.c - rep2.c) <= 1e-2 * abs(rep1.c)
    # defect shrinks linearly with t
    d = np.asarray(rep1.defects)
    assert np.all(d[:-1] < d[1:])
    ratios = d[1:] / d[:-1]
    assert np.all((ratios > 5.0) & (ratios < 20.0))
    assert d[0] <= 1e-2


def test_linearization_rejects_probes_outside_the_window():
    rng = np.random.default_rng(59)
    pts = np.column_stack([rng.uniform(0.15, 0.85, 100), rng.uniform(0.15, 0.85, 100)])
    far_bump = ho.polynomial_bump((5.0, 5.0), 0.1)
    with pytest.raises(DegenerateFit):
        ho.linearization_check(
            lambda a, b: v_model_jet(0.3, a, b), far_bump, (1e-2,), pts, s=0.3
        )


def test_polynomial_bump_support_and_peak():
    bump = ho.polynomial_bump((0.5, 0.5), 0.35, amplitude=0.03)
    a, b = variables(np.array([[0.5, 0.5], [0.95, 0.5], [0.5, 0.1]]))
    jet = bump(a, b)
    assert jet.val[0] == pytest.approx(0.03)
    assert jet.val[1] == 0.0
    assert jet.val[2] == 0.0
    assert np.all(np.isfinite(jet.hess))


def test_transform_jacobian_diagnostics(model_solution):
    sol = model_solution(0.5, 1.0 / 64.0)
    diag = ho.jacobian_diag(sol, 0.0, [0.5, 0.25, 0.125])
    assert diag.injectivity_flag
    assert diag.violation_fraction == 0.0
    assert 0.0 < diag.jac_min <= diag.jac_max <= 1.5
    assert diag.min_separation > 0.0
    assert diag.lambdas == (0.5, 0.25, 0.125)

    # mirror-symmetric data folds the two sides onto each other: the map
    # cannot be injective, and the diagnostics must say so without raising
    sym = _fresh_samples(
        0.5, 1.0 / 32.0, lambda xn, z: np.asarray(eval_w1s(0.5, -np.abs(xn), z))
    )
    diag2 = ho.jacobian_diag(sym, 0.0, [0.5, 0.25])
    assert not diag2.injectivity_flag
    assert diag2.min_separation == 0.0
    assert diag2.violation_fraction > 0.2


def test_tangential_flow_properties():
    rng = np.random.default_rng(61)
    y = rng.uniform(0.05, 0.95, (300, 3))
    # identity drift
    assert np.max(np.abs(ho.diffeo_flow(np.array([0.0]), y) - y)) == 0.0
    # only the tangential coordinate moves, and the displacement is O(|a|)
    # with a stable constant
    ratios = []
    for a in (1e-3, 1e-2, 1e-1):
        ya = ho.diffeo_flow(np.array([a]), y)
        assert np.array_equal(ya[:, 1:], y[:, 1:])
        ratios.append(np.max(np.linalg.norm(ya - y, axis=1)) / a)
    ratios = np.asarray(ratios)
    assert ratios.max() > 0.0
    assert ratios.max() - ratios.min() <= 0.05 * ratios.max()
    # points outside the support never move (bitwise)
    far = y.copy()
    far[:100, -2:] = 0.9  # radius >= 1/2 in the (y_n, y_{n+1}) plane
    far[100:200, 0] = 0.8  # |y''| >= 3/4
    moved = ho.diffeo_flow(np.array([0.5]), far)
    assert np.array_equal(moved[:100], far[:100])
    assert np.array_equal(moved[100:200], far[100:200])
    with pytest.raises(OutOfDomain):
        ho.diffeo_flow(np.array([1.0]), y)
    with pytest.raises(ValueError):
        ho.diffeo_flow(np.array([0.1, 0.2]), y)
    # nothing to flow in two dimensions
    y2 = rng.uniform(0.1, 0.9, (50, 2))
    assert np.array_equal(ho.diffeo_flow(np.array([]), y2), y2)


def test_inverse_asymptotics_recovers_the_dual_expansion(model_solution):
    sol = model_solution(0.5, 1.0 / 64.0)
    field = ho.legendre_function(sol, ny=21)
    ia = ho.inverse_asymptotics(field)
    # x_n(y) = a0 y_n^2 - a1 y_{n+1}^2 + g with a0 = a1 = 1/2 and flat graph
    assert ia.a0 == pytest.approx(0.5, abs=5e-2)
    assert ia.a1 == pytest.approx(0.5, abs=5e-2)
    assert np.max(np.abs(np.asarray(ia.g))) <= 5e-3
    assert len(ia.radii) == len(ia.residuals)
